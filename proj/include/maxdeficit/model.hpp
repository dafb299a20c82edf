#pragma once

#include <cmath>
#include <string>

#include "maxdeficit/errors.hpp"

namespace maxdeficit {

/// Compound Poisson line with exponential claim sizes.
struct ExponentialLine {
    double lambda = 0.0;  ///< claim intensity (claims per unit time)
    double mu = 0.0;      ///< mean claim size
    double c = 0.0;       ///< premium rate

    /// Throws DomainError unless lambda, mu, c > 0 and c > lambda * mu.
    void validate() const {
        if (!(lambda > 0.0) || !(mu > 0.0) || !(c > 0.0)) {
            throw DomainError("ExponentialLine requires lambda > 0, mu > 0, c > 0");
        }
        if (!(c > lambda * mu)) {
            throw DomainError("ExponentialLine requires a positive safety loading c > lambda * mu");
        }
    }

    /// Line with the given ruin constants a = lambda mu / c and b = R, normalised to premium rate c.
    static ExponentialLine from_constants(double a, double b, double c = 1.0) {
        if (!(a > 0.0 && a < 1.0) || !(b > 0.0) || !(c > 0.0)) {
            throw DomainError("from_constants requires a in (0,1), b > 0, c > 0");
        }
        const double mu = (1.0 - a) / b;
        return ExponentialLine{a * c / mu, mu, c};
    }

    /// Line with mean claim size mu and adjustment coefficient R in (0, 1/mu).
    static ExponentialLine from_adjustment(double mu, double R, double c = 1.0) {
        if (!(mu > 0.0) || !(R > 0.0) || !(R * mu < 1.0)) {
            throw DomainError("from_adjustment requires R in (0, 1/mu)");
        }
        return from_constants(1.0 - mu * R, R, c);
    }
};

struct RuinConstants {
    double a = 0.0;  ///< ultimate ruin probability at zero capital
    double b = 0.0;  ///< exponential decay rate (= adjustment coefficient)
};

/// R = (1/mu)(1 - lambda mu / c).
inline double adjustment_coefficient(const ExponentialLine& line) {
    line.validate();
    return (1.0 - line.lambda * line.mu / line.c) / line.mu;
}

inline RuinConstants ruin_constants(const ExponentialLine& line) {
    line.validate();
    return {line.lambda * line.mu / line.c, 1.0 / line.mu - line.lambda / line.c};
}

/// psi(u) = a exp(-b u) for u >= 0; ruin is certain from negative capital.
inline double ultimate_ruin(const RuinConstants& k, double u) {
    if (u < 0.0) return 1.0;
    return k.a * std::exp(-k.b * u);
}

inline double ultimate_ruin(const ExponentialLine& line, double u) {
    return ultimate_ruin(ruin_constants(line), u);
}

}  // namespace maxdeficit
