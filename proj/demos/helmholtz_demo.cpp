// Adapts the 0.04 square mesh to the Helmholtz solution cos(2*pi*y) with the
// direct mover and writes before/after SVGs into the working directory.

#include <cstdio>

#include "meshmove/meshmove.hpp"

int main() {
    using namespace meshmove;
    const auto& problem = find_problem("helmholtz:cos(2pi*y)");
    Mesh coarse = generate_unit_square_mesh(0.04);
    coarse.set_field("u", solve(problem, coarse));

    const AdaptResult result = adapt(coarse, "u", AdaptConfig{});
    std::printf("nodes %zu elements %zu\n", coarse.num_nodes(), coarse.num_elements());
    for (std::size_t e = 0; e < result.report.uniformity.size(); ++e) {
        std::printf("epoch %zu  uniformity %.4e\n", e + 1, result.report.uniformity[e]);
    }
    std::printf("error reduction %.2f%%, tangling ratio %g\n", error_reduction(problem, coarse, result.mesh),
                result.report.tangling_ratio);

    render_svg(coarse, std::string("u"), "helmholtz_initial.svg");
    Mesh adapted = result.mesh;
    adapted.set_field("u", solve(problem, adapted));
    render_svg(adapted, std::string("u"), "helmholtz_adapted.svg");
    return 0;
}
