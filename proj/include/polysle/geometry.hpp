#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polysle/complexutil.hpp"

namespace polysle {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corner of a (generalized) polygon: a prime end together with the exterior
// angle beta*pi. Interior angle alpha*pi with alpha + beta = 1. A corner at
// infinity has no position; its beta lies in [1, 3].
struct Corner {
    std::optional<cplx> position; // nullopt: corner at infinity
    double beta = 0.0;

    double alpha() const { return 1.0 - beta; }
    bool at_infinity() const { return !position.has_value(); }
};

// Half-plane description of a marked polygon: prevertices z_1 < ... < z_n
// (all nonzero, straddling 0) with exterior-angle weights, plus the SLE
// parameter kappa. The map basepoint is fixed at 0.
struct PrevertexConfig {
    std::vector<double> prevertices;
    std::vector<double> betas;
    double kappa = 4.0;
    double basepoint = 0.0;

    std::size_t n() const { return prevertices.size(); }
    std::vector<double> rhos() const;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
};

// Structural checks shared by every consumer: nonempty, strictly
// increasing nonzero prevertices, matching finite weights, positive kappa.
// One-sided markings (all prevertices on one side of 0) are fine here.
ValidationReport validate_structure(const PrevertexConfig& cfg);

// Pure predicate over the configuration. Structural checks plus membership
// in the marked-polygon class (prevertices straddle the basepoint); weight
// ranges outside the planar-polygon convention and angle sums != 2 are
// reported as warnings only.
ValidationReport validate_config(const PrevertexConfig& cfg);

enum class RhoBetaDirection { RhoToBeta, BetaToRho };

// Elementwise dictionary rho_k = (kappa/2) beta_k. Throws on kappa <= 0.
std::vector<double> rho_beta_convert(const std::vector<double>& values, double kappa,
                                     RhoBetaDirection direction);

std::vector<double> rhos_from_betas(const std::vector<double>& betas, double kappa);
std::vector<double> betas_from_rhos(const std::vector<double>& rhos, double kappa);

// Sum of exterior angles in units of pi; 2 for a closed polygon.
double exterior_angle_sum(const std::vector<double>& betas);

struct PolygonSnapshot {
    std::vector<Corner> corners;
    double time = 0.0;
    bool closed = false;
};

} // namespace polysle
