#include "topflow/quadrature.hpp"

#include <cmath>

#include "topflow/error.hpp"

namespace topflow {

namespace {

void push3(QuadratureRule& r, double a, double w) {
    // the three permutations of (a, a, 1-2a)
    double c = 1.0 - 2.0 * a;
    r.points.push_back({{c, a, a}, w});
    r.points.push_back({{a, c, a}, w});
    r.points.push_back({{a, a, c}, w});
}

// Gauss-Legendre nodes and weights on [0,1] by Newton iteration on P_n.
void gauss_legendre_01(int n, double* x, double* w) {
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p1 = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        x[i] = 0.5 * (1.0 + t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

QuadratureRule quadrature_rule(int degree) {
    if (degree < 1 || degree > 6)
        throw Error("quadrature_rule: unsupported degree " + std::to_string(degree));

    QuadratureRule r;
    r.requested_degree = degree;
    if (degree == 1) {
        r.exactness_degree = 1;
        r.points.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0});
    } else if (degree == 2) {
        r.exactness_degree = 2;
        push3(r, 1.0 / 6.0, 1.0 / 3.0);
    } else {
        // Collapsed (Duffy) tensor Gauss rule: with 5 points per direction it
        // integrates total degree 8 exactly, covering every integrand of the
        // P1+bubble forms (bubble-bubble convection terms reach degree 8).
        // All weights positive, nodes/weights at machine precision.
        r.exactness_degree = 8;
        const int n = 5;
        double gx[n], gw[n];
        gauss_legendre_01(n, gx, gw);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double u = gx[i], v = gx[j];
                double x = u * (1.0 - v), y = u * v;  // jacobian u
                r.points.push_back({{1.0 - x - y, x, y}, gw[i] * gw[j] * 2.0 * u});
            }
    }
    double sum = 0.0;
    for (const auto& qp : r.points) sum += qp.weight;
    for (auto& qp : r.points) qp.weight /= sum;
    return r;
}

}  // namespace topflow
