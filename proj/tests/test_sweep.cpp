#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "nrpl/sweep.hpp"
#include "support.hpp"

using namespace nrpl;
using namespace nrpl::testing;

namespace {

SweepSpec small_spec() {
    SweepSpec s;
    s.axes = {{SweepQuantity::delta_L, 0.45, 0.5, 2, Spacing::linear, "omega_m"}};
    s.fixed = {{SweepQuantity::omega_spin, {0.0, "sagnac_over_omega_m"}}};
    s.outputs = {SweepOutput::N_b, SweepOutput::G};
    return s;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream out;
    write_csv(out, r);
    return out.str();
}

std::size_t column(const SweepResult& r, const std::string& name) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (r.columns[i] == name) return i;
    }
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

}  // namespace

TEST(Sweep, MinimalSweepIsMonotoneInGain) {
    const SweepResult r = run_sweep(small_spec(), reference_config());
    ASSERT_EQ(r.rows.size(), 2u);
    const std::size_t nb = column(r, "N_b[1]");
    const std::size_t g = column(r, "G[rad/s]");
    EXPECT_EQ(*r.rows[0][0], 0.45);
    EXPECT_EQ(*r.rows[1][0], 0.5);
    EXPECT_EQ((*r.rows[0][nb] < *r.rows[1][nb]), (*r.rows[0][g] < *r.rows[1][g]));
    EXPECT_TRUE(r.markers[0].empty());
}

TEST(Sweep, RowOrderIsOuterAxisMajor) {
    SweepSpec s;
    s.axes = {{SweepQuantity::omega_spin, -0.1, 0.1, 3, Spacing::linear, "sagnac_over_omega_m"},
              {SweepQuantity::pump_power, 1.0, 100.0, 3, Spacing::log, "uW"}};
    s.fixed = {{SweepQuantity::delta_L, {0.45, "omega_m"}}};
    s.outputs = {SweepOutput::photon_number_1};
    const SweepResult r = run_sweep(s, reference_config());
    ASSERT_EQ(r.rows.size(), 9u);
    EXPECT_EQ(r.columns[0], "sagnac_over_omega_m[1]");
    EXPECT_EQ(r.columns[1], "pump_power[uW]");
    const double expected_spin[] = {-0.1, -0.1, -0.1, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1};
    for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(*r.rows[k][0], expected_spin[k]);
    EXPECT_EQ(*r.rows[0][1], 1.0);
    EXPECT_NEAR(*r.rows[1][1], 10.0, 1e-12);
    EXPECT_EQ(*r.rows[2][1], 100.0);
}

TEST(Sweep, MarkersNameTheViolatedPrecondition) {
    SweepSpec s;
    s.axes = {{SweepQuantity::delta_L, 0.05, 0.45, 5, Spacing::linear, "omega_m"}};
    s.fixed = {{SweepQuantity::omega_spin, {-0.1, "sagnac_over_omega_m"}}};
    s.outputs = {SweepOutput::P_th, SweepOutput::G};
    const SweepResult r = run_sweep(s, reference_config());
    ASSERT_EQ(r.rows.size(), 5u);
    const std::size_t pth = column(r, "P_th[W]");
    EXPECT_FALSE(r.rows[0][pth].has_value());
    EXPECT_EQ(r.markers[0], "P_th:delta_L+delta_sag>0");
    EXPECT_TRUE(r.rows[4][pth].has_value());
    EXPECT_TRUE(r.markers[4].empty());

    // Dropping marker rows leaves a fully finite table.
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        if (!r.markers[k].empty()) continue;
        for (const auto& cell : r.rows[k]) {
            ASSERT_TRUE(cell.has_value());
            EXPECT_TRUE(std::isfinite(*cell));
        }
    }
    const std::string text = csv_of(r);
    EXPECT_NE(text.find("NA"), std::string::npos);
    EXPECT_EQ(text.find("nan"), std::string::npos);
    EXPECT_EQ(text.find("inf"), std::string::npos);
}

TEST(Sweep, SolverFailuresBecomeMarkers) {
    SweepSpec s;
    s.axes = {{SweepQuantity::pump_power, 10.0, 10000.0, 2, Spacing::log, "uW"}};
    s.fixed = {{SweepQuantity::delta_L, {0.40, "omega_m"}},
               {SweepQuantity::omega_spin, {0.0, "sagnac_over_omega_m"}}};
    s.outputs = {SweepOutput::x_s, SweepOutput::P_th};
    const SweepResult r = run_sweep(s, reference_config());
    EXPECT_TRUE(r.markers[0].empty());
    EXPECT_EQ(r.markers[1], "x_s:single_steady_state");
    EXPECT_TRUE(r.rows[1][column(r, "P_th[W]")].has_value());
}

TEST(Sweep, EveryColumnCarriesAUnit) {
    for (const char* name : {"fig2a", "fig2b", "fig3", "fig4a", "fig4b"}) {
        SweepSpec s = figure_preset(name);
        for (SweepAxis& a : s.axes) a.count = std::min(a.count, 3);
        const SweepResult r = run_sweep(s, reference_config());
        for (const std::string& c : r.columns) {
            EXPECT_NE(c.find('['), std::string::npos) << c;
            EXPECT_EQ(c.back(), ']') << c;
        }
        const std::string header = csv_of(r).substr(0, csv_of(r).find('\n'));
        EXPECT_EQ(header.substr(header.rfind(',') + 1), "marker");
    }
}

TEST(Sweep, CsvDialect) {
    const SweepResult r = run_sweep(small_spec(), reference_config());
    const std::string text = csv_of(r);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(text.substr(0, text.find('\n')), "delta_L_over_omega_m[1],N_b[1],G[rad/s],G_over_gamma_m[1],marker");
    // 17 significant digits reproduce every double exactly.
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    const double g = std::stod(line.substr(line.find(',', line.find(',') + 1) + 1));
    EXPECT_EQ(g, *r.rows[0][2]);
}

TEST(Sweep, ParallelRunIsBitIdentical) {
    SweepSpec s = figure_preset("fig3");
    s.axes[1].count = 60;
    s.outputs = {SweepOutput::G, SweepOutput::R, SweepOutput::eta, SweepOutput::dn};
    const std::string serial = csv_of(run_sweep(s, reference_config(), 1));
    EXPECT_EQ(csv_of(run_sweep(s, reference_config(), 8)), serial);
    EXPECT_EQ(csv_of(run_sweep(s, reference_config(), 3)), serial);
}

TEST(Sweep, ProvenanceBlock) {
    const SweepResult r = run_sweep(small_spec(), reference_config());
    EXPECT_EQ(r.provenance["artifact"]["name"], "nrpl");
    EXPECT_TRUE(r.provenance.contains("timestamp"));
    EXPECT_EQ(parse_sweep_spec(r.provenance["sweep"]), small_spec());
    EXPECT_EQ(parse_config(r.provenance["config"]).drive, reference_config().drive);
    const json j = to_json(r);
    EXPECT_EQ(j["rows"].size(), 2u);
}

TEST(Sweep, ValidationBeforeComputation) {
    SweepSpec s = small_spec();
    s.axes.clear();
    EXPECT_THROW(run_sweep(s, reference_config()), ValidationError);
    s = small_spec();
    s.axes.push_back({SweepQuantity::pump_power, 1, 2, 2, Spacing::linear, "uW"});
    s.axes.push_back({SweepQuantity::coupling_J, 0.4, 0.6, 2, Spacing::linear, "omega_m"});
    EXPECT_THROW(run_sweep(s, reference_config()), ValidationError);
    s = small_spec();
    s.axes[0].count = 1;
    EXPECT_THROW(validate(s), ValidationError);
    s = small_spec();
    s.axes[0].hi = s.axes[0].lo;
    EXPECT_THROW(validate(s), ValidationError);
    s = small_spec();
    s.axes[0].unit = "uW";
    EXPECT_THROW(validate(s), ValidationError);
    s = small_spec();
    s.axes[0] = {SweepQuantity::delta_L, -0.5, 0.5, 3, Spacing::log, "omega_m"};
    EXPECT_THROW(validate(s), ValidationError);
    s = small_spec();
    s.outputs.clear();
    EXPECT_THROW(validate(s), ValidationError);
    EXPECT_THROW(parse_sweep_spec(json{{"axes", json::array()}, {"outputs", {"G"}}, {"bogus", 1}}),
                 ValidationError);
    EXPECT_THROW(parse_sweep_spec(json::parse(R"({"axes":[{"quantity":"delta_L","lo":0,"hi":1,"count":2,"unit":"omega_m"}],"outputs":["Q"]})")),
                 ValidationError);
}

TEST(Sweep, CouplingAxisChangesJ) {
    SweepSpec s;
    s.axes = {{SweepQuantity::coupling_J, 0.45, 0.55, 3, Spacing::linear, "omega_m"}};
    s.fixed = {{SweepQuantity::delta_L, {0.5, "omega_m"}}, {SweepQuantity::omega_spin, {0.0, "sagnac_over_omega_m"}}};
    s.outputs = {SweepOutput::G};
    const SweepResult r = run_sweep(s, reference_config());
    const std::size_t g = column(r, "G_over_gamma_m[1]");
    EXPECT_GT(*r.rows[1][g], *r.rows[0][g]);
    EXPECT_GT(*r.rows[1][g], *r.rows[2][g]);
}

TEST(FigurePreset, RoundTrip) {
    for (const char* name : {"fig2a", "fig2b", "fig3", "fig4a", "fig4b"}) {
        const SweepSpec s = figure_preset(name);
        EXPECT_EQ(parse_sweep_spec(to_json(s)), s) << name;
        EXPECT_EQ(parse_sweep_spec(json::parse(to_json(s).dump())), s) << name;
    }
    EXPECT_THROW(figure_preset("fig5"), ValidationError);
}

TEST(FigurePreset, Contents) {
    const SweepSpec f4a = figure_preset("fig4a");
    EXPECT_EQ(f4a.axes.back().quantity, SweepQuantity::pump_power);
    EXPECT_NE(std::find(f4a.outputs.begin(), f4a.outputs.end(), SweepOutput::N_b), f4a.outputs.end());
    EXPECT_NE(std::find(f4a.outputs.begin(), f4a.outputs.end(), SweepOutput::P_th), f4a.outputs.end());
    const SweepSpec f2b = figure_preset("fig2b");
    EXPECT_EQ(f2b.outputs, std::vector<SweepOutput>{SweepOutput::eta});
    EXPECT_EQ(f2b.axes[0].count, 400);
    EXPECT_EQ(f2b.axes[0].lo, -1.5);
    const SweepSpec f4b = figure_preset("fig4b");
    EXPECT_EQ(f4b.axes.size(), 2u);
    EXPECT_EQ(f4b.axes[0].count * f4b.axes[1].count, 200 * 200);
}

TEST(FigurePreset, Fig4aMarksThresholdCrossing) {
    SweepSpec s = figure_preset("fig4a");
    s.axes[1].count = 60;
    const SweepResult r = run_sweep(s, reference_config());
    const std::size_t pump = column(r, "pump_power[uW]");
    const std::size_t pth = column(r, "P_th[W]");
    const std::size_t nb = column(r, "N_b[1]");
    // Positive-shift curve: N_b crosses 1 between the grid points bracketing P_th.
    for (std::size_t k = 2 * 60; k + 1 < 3 * 60; ++k) {
        const double p0 = *r.rows[k][pump] * 1e-6, p1 = *r.rows[k + 1][pump] * 1e-6;
        const double th = *r.rows[k][pth];
        if (p0 <= th && th < p1) {
            EXPECT_LT(*r.rows[k][nb], 1.05);
            EXPECT_GT(*r.rows[k + 1][nb], 0.95);
        }
    }
}
