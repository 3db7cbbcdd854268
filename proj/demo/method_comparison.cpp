// Noiseless comparison of the three estimators on the reference lines.

#include <cstdio>

#include "lineid/lineid.hpp"

namespace {

void print(const char* title, const lineid::MethodComparison& cmp) {
    std::printf("%s (mean current unbalance %.2f%%)\n", title, cmp.degree_of_unbalance_pct);
    std::printf("  reference  R1=%.4f X1=%.4f B1=%.4e\n", cmp.reference.r1, cmp.reference.x1, cmp.reference.b1);
    for (const auto& r : cmp.rows) {
        const auto name = lineid::to_string(r.method);
        if (r.failure) {
            std::printf("  %-8.*s  failed: %s\n", int(name.size()), name.data(), r.failure->c_str());
            continue;
        }
        std::printf("  %-8.*s   R1=%.4f (%+.3f%%) X1=%.4f (%+.3f%%) B1=%.4e (%+.3f%%)\n", int(name.size()), name.data(),
                    r.estimate.r1, r.r1_error_pct, r.estimate.x1, r.x1_error_pct, r.estimate.b1, r.b1_error_pct);
    }
}

} // namespace

int main() {
    using namespace lineid;
    const double target = fixtures::case_unbalance_pct;
    print("transposed line", run_method_comparison(fixtures::transposed_line(), target, 200));
    const auto untransposed = run_method_comparison(fixtures::untransposed_line(), target, 200);
    print("untransposed line", untransposed);
    if (untransposed.optimal_sequence) {
        std::printf("  optimal Z_012:\n");
        const auto& z = untransposed.optimal_sequence->z_012;
        for (int i = 0; i < 3; ++i)
            std::printf("    %9.4f%+9.4fj  %9.4f%+9.4fj  %9.4f%+9.4fj\n", z(i, 0).real(), z(i, 0).imag(), z(i, 1).real(),
                        z(i, 1).imag(), z(i, 2).real(), z(i, 2).imag());
    }
    return 0;
}
