#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"

using namespace lineid;

namespace {

SweepConfig small_sweep() {
    SweepConfig c;
    c.lengths_km = {14.5, 75.0, 150.0};
    c.n_samples_per_set = 40;
    c.m_sets = 6;
    c.base_line = fixtures::untransposed_line();
    c.profile = case_study_profile(c.base_line, fixtures::case_unbalance_pct, c.n_samples_per_set);
    c.threads = 1;
    return c;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("lineid_test_" + name)).string();
}

} // namespace

TEST(MethodComparison, TransposedBalancedLoad) {
    // balanced load on a transposed line: the positive-sequence methods are
    // exact, the 18-unknown model is not identifiable
    const auto cmp = run_method_comparison(fixtures::transposed_line(), 0.0, 200);
    EXPECT_NEAR(cmp.degree_of_unbalance_pct, 0.0, 1e-9);
    for (Method m : {Method::Single, Method::Double}) {
        const auto& r = cmp.row(m);
        ASSERT_FALSE(r.failure) << *r.failure;
        EXPECT_LE(std::abs(r.r1_error_pct), 0.1);
        EXPECT_LE(std::abs(r.x1_error_pct), 0.1);
        EXPECT_LE(std::abs(r.b1_error_pct), 0.1);
    }
    const auto& opt = cmp.row(Method::Optimal);
    ASSERT_TRUE(opt.failure.has_value());
    EXPECT_NE(opt.failure->find("insufficient_excitation"), std::string::npos);
}

TEST(MethodComparison, TransposedUnbalancedLoad) {
    const auto cmp = run_method_comparison(fixtures::transposed_line(), fixtures::case_unbalance_pct, 200);
    EXPECT_NEAR(cmp.degree_of_unbalance_pct, 14.0, 0.5);
    for (const auto& r : cmp.rows) {
        ASSERT_FALSE(r.failure) << *r.failure;
        EXPECT_LE(std::abs(r.r1_error_pct), 0.1) << to_string(r.method);
        EXPECT_LE(std::abs(r.x1_error_pct), 0.1) << to_string(r.method);
        EXPECT_LE(std::abs(r.b1_error_pct), 0.1) << to_string(r.method);
    }
}

TEST(MethodComparison, UntransposedUnbalancedLoad) {
    const auto cmp = run_method_comparison(fixtures::untransposed_line(), fixtures::case_unbalance_pct, 200);
    ASSERT_TRUE(cmp.optimal_sequence.has_value());
    const Matrix3c zr = fixtures::untransposed_z012();
    const Matrix3c br = fixtures::untransposed_b012();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_LE(oracle::rel_diff(cmp.optimal_sequence->z_012(i, j), zr(i, j)) * 100.0, 0.1);
            EXPECT_LE(oracle::rel_diff(cmp.optimal_sequence->b_012(i, j), br(i, j)) * 100.0, 0.1);
        }
    const double opt = std::abs(cmp.row(Method::Optimal).r1_error_pct);
    EXPECT_GE(std::abs(cmp.row(Method::Single).r1_error_pct), 10.0 * opt);
    EXPECT_GE(std::abs(cmp.row(Method::Double).r1_error_pct), 10.0 * opt);
}

TEST(MethodComparison, NeedsTwoSamples) {
    EXPECT_THROW(run_method_comparison(fixtures::transposed_line(), 0.0, 1), Error);
}

TEST(LengthSweep, RowsAndInvariants) {
    const auto c = small_sweep();
    const auto r = run_length_sweep(c);
    ASSERT_EQ(r.rows.size(), 27u);
    for (const auto& row : r.rows) {
        EXPECT_LE(row.ci_lo, row.mean_err_pct);
        EXPECT_LE(row.mean_err_pct, row.ci_hi);
        EXPECT_GE(row.sd_err_pct, 0.0);
        EXPECT_EQ(row.failures, 0u);
        const std::size_t expected = row.method == Method::Single ? c.m_sets * c.n_samples_per_set : c.m_sets;
        EXPECT_EQ(row.count, expected);
    }
    EXPECT_TRUE(r.failures.empty());
}

TEST(LengthSweep, ConfidenceIntervalIsNormalTheory) {
    const auto r = run_length_sweep(small_sweep());
    const auto* row = r.find(75.0, Method::Optimal, Parameter::X1);
    ASSERT_NE(row, nullptr);
    const double half = 1.96 * row->sd_err_pct / std::sqrt(static_cast<double>(row->count));
    EXPECT_NEAR(row->ci_hi - row->mean_err_pct, half, 1e-12 * std::max(1.0, half));
    EXPECT_NEAR(row->mean_err_pct - row->ci_lo, half, 1e-12 * std::max(1.0, half));
}

TEST(LengthSweep, DeterministicAndThreadIndependent) {
    auto c = small_sweep();
    const auto a = run_length_sweep(c);
    const auto b = run_length_sweep(c);
    c.threads = 4;
    const auto d = run_length_sweep(c);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        EXPECT_EQ(a.rows[k], b.rows[k]);
        EXPECT_EQ(a.rows[k], d.rows[k]);
    }
    c.noise.seed += 1;
    const auto e = run_length_sweep(c);
    EXPECT_NE(a.rows[0].sd_err_pct, e.rows[0].sd_err_pct);
}

TEST(LengthSweep, FailuresAreCountedNotDropped) {
    SweepConfig c;
    c.lengths_km = {14.5};
    c.n_samples_per_set = 20;
    c.m_sets = 3;
    c.base_line = fixtures::transposed_line();
    c.noise.sigma_fraction = 0.0;
    c.methods = {Method::Optimal, Method::Single};
    const auto r = run_length_sweep(c);
    const auto* opt = r.find(14.5, Method::Optimal, Parameter::X1);
    ASSERT_NE(opt, nullptr);
    EXPECT_EQ(opt->failures, 3u);
    EXPECT_EQ(opt->count, 0u);
    EXPECT_EQ(r.failures.size(), 3u);
    for (const auto& f : r.failures) {
        EXPECT_EQ(f.method, Method::Optimal);
        EXPECT_EQ(f.length_km, 14.5);
        EXPECT_NE(f.message.find("insufficient_excitation"), std::string::npos);
    }
    EXPECT_EQ(r.find(14.5, Method::Single, Parameter::X1)->failures, 0u);
}

TEST(LengthSweep, InvalidConfigRejected) {
    auto c = small_sweep();
    c.m_sets = 1;
    EXPECT_THROW(run_length_sweep(c), Error);
    c = small_sweep();
    c.lengths_km = {10.0, -1.0};
    EXPECT_THROW(run_length_sweep(c), Error);
    c = small_sweep();
    c.lengths_km.clear();
    EXPECT_THROW(run_length_sweep(c), Error);
    c = small_sweep();
    c.methods.clear();
    EXPECT_THROW(run_length_sweep(c), Error);
}

TEST(ExportSweep, CardinalityAndRoundTrip) {
    const auto r = run_length_sweep(small_sweep());
    const std::string path = temp_path("sweep.csv");
    export_sweep(r, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "length_km,method,parameter,mean_err_pct,sd_err_pct,ci_lo,ci_hi");
    std::size_t rows = 0;
    while (std::getline(f, line)) rows += !line.empty();
    EXPECT_EQ(rows, 27u);

    std::ostringstream text;
    text << std::ifstream(path).rdbuf();
    const auto back = parse_sweep_csv(text.str());
    ASSERT_EQ(back.rows.size(), r.rows.size());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        EXPECT_EQ(back.rows[k].length_km, r.rows[k].length_km);
        EXPECT_EQ(back.rows[k].method, r.rows[k].method);
        EXPECT_EQ(back.rows[k].parameter, r.rows[k].parameter);
        EXPECT_EQ(back.rows[k].mean_err_pct, r.rows[k].mean_err_pct);
        EXPECT_EQ(back.rows[k].sd_err_pct, r.rows[k].sd_err_pct);
        EXPECT_EQ(back.rows[k].ci_lo, r.rows[k].ci_lo);
        EXPECT_EQ(back.rows[k].ci_hi, r.rows[k].ci_hi);
    }
    std::remove(path.c_str());
}

TEST(ExportSweep, ErrorCases) {
    EXPECT_THROW(export_sweep(SweepResult{}, temp_path("empty.csv")), Error);
    const auto r = run_length_sweep(small_sweep());
    try {
        export_sweep(r, "/nonexistent-dir/sub/sweep.csv");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
    EXPECT_THROW(parse_sweep_csv("bad,header\n"), Error);
    EXPECT_THROW(parse_sweep_csv(std::string(sweep_csv_header) + "\n1,single,X1,1,2,3\n"), Error);
    EXPECT_THROW(parse_sweep_csv(std::string(sweep_csv_header) + "\n1,triple,X1,1,2,3,4\n"), Error);
    EXPECT_THROW(parse_sweep_csv(std::string(sweep_csv_header) + "\n1,single,X1,1,2x,3,4\n"), Error);
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 14.5, -2.5e-300, 123456789.123456789, 5e-324}) {
        const std::string s = format_double(v);
        EXPECT_EQ(parse_double(s, "test"), v) << s;
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(14.5), "14.5");
}

TEST(Anchors, EvaluatedFromRows) {
    SweepResult r;
    auto add = [&](double len, Method m, double sd) {
        SweepRow row;
        row.length_km = len;
        row.method = m;
        row.parameter = Parameter::X1;
        row.sd_err_pct = sd;
        row.count = 10;
        r.rows.push_back(row);
    };
    add(14.5, Method::Optimal, 17.0);
    add(14.5, Method::Double, 50.0);
    add(14.5, Method::Single, 80.0);
    add(150.0, Method::Optimal, 0.5);
    add(150.0, Method::Double, 14.0);
    add(150.0, Method::Single, 30.0);
    const auto a = evaluate_anchors(r);
    ASSERT_EQ(a.size(), 5u);
    EXPECT_EQ(a[0].passed, true);
    EXPECT_EQ(a[1].passed, false); // single 30% is outside the band
    EXPECT_EQ(a[2].passed, true);
    EXPECT_EQ(a[3].passed, true);
    EXPECT_EQ(a[4].passed, true);
    EXPECT_FALSE(evaluate_anchors(SweepResult{})[0].passed.has_value());
}

TEST(Anchors, NonIncreasingTolerance) {
    EXPECT_TRUE(non_increasing({{1, 10.0}, {2, 10.9}, {3, 5.0}}));
    EXPECT_FALSE(non_increasing({{1, 10.0}, {2, 11.1}}));
}
