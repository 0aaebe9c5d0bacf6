#pragma once

#include <array>
#include <vector>

namespace topflow {

// Quadrature on the reference triangle in barycentric coordinates.
// Weights are normalized to sum to 1; integrals scale by the physical area.
struct QuadraturePoint {
    std::array<double, 3> lambda;
    double weight;
};

struct QuadratureRule {
    int requested_degree = 0;
    int exactness_degree = 0;
    std::vector<QuadraturePoint> points;
};

// Returns a rule exact for polynomials of at least the requested total degree
// (1 <= degree <= 6). Requests of degree 3 and above are served by a single
// 25-point collapsed Gauss rule exact through degree 8, which covers every
// integrand of the P1+bubble forms (bubble-bubble convection reaches 8).
QuadratureRule quadrature_rule(int degree);

}  // namespace topflow
