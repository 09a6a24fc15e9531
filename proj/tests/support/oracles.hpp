#pragma once

// Brute-force reference computations. None of these call the solver they
// are used to check.

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wipt/harvester.hpp"
#include "wipt/multiuser.hpp"

namespace oracle {

using cdouble = std::complex<double>;

struct GridAllocation {
  std::vector<double> p;
  double rate = -1.0;  // -1 when no grid point is feasible
};

/// Exhaustive search over {p >= 0, sum p = P} on a grid of step step_frac*P
/// (N <= 3), maximizing sum log2(1 + g p / noise) subject to
/// `feasible(received_power)`. Where feasibility flips between neighbouring
/// grid points the edge itself is also scored.
GridAllocation grid_allocation(std::span<const double> gains, double noise, double budget,
                               double step_frac,
                               const std::function<bool(double)>& feasible);

double rate_of(std::span<const double> gains, double noise, std::span<const double> p);

/// log2 det(I + H Q H^H / noise).
double mimo_rate(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& q, double noise);

struct GridCovariance {
  Eigen::MatrixXcd q;
  double rate = -1.0;
};

/// 2x2 covariance search: Q = P U diag(t, 1-t) U^H with U parameterized by
/// (theta, phi), subject to k2 tr(H Q H^H) >= e_target. A coarse grid is
/// followed by finer grids around the incumbent.
GridCovariance grid_covariance_2x2(const Eigen::MatrixXcd& h, double budget, double noise,
                                   double k2, double e_target, int steps);

/// Exact time average of |sum_n a_n e^{j 2 pi n t}|^4 for real amplitudes,
/// by summing over index quadruples with n1 + n2 = n3 + n4.
double multisine_fourth_moment(std::span<const double> amplitudes);

/// z_dc of coherent power symbols plus CSCG information symbols, from the
/// quadruple-sum fourth moment.
double superposed_zdc(std::span<const double> gains, std::span<const double> p_power,
                      std::span<const double> p_info, const wipt::DiodeNonlinearParams& hv);

struct SuperposedGrid {
  std::vector<double> p_power;
  std::vector<double> p_info;
  double z_dc = -1.0;
};

/// N = 2 search over (P_I1, P_I2, P_P1) with P_P2 taking the rest of the
/// budget, subject to the information rate floor.
SuperposedGrid grid_superposed_n2(std::span<const double> gains, double noise, double budget,
                                  double rate_floor, const wipt::DiodeNonlinearParams& hv,
                                  int steps);

/// SINRs and per-ER received power by explicit loops over antennas.
struct DenseEvaluation {
  std::vector<double> sinr;
  std::vector<double> received;
};
DenseEvaluation dense_evaluate(const wipt::MultiuserScenario& sc, const wipt::BeamformerSet& beams,
                               bool energy_cancelled = false);

/// Largest sum_j |g_j w|^2 over `draws` random beams with |w|^2 = budget.
double random_beam_energy(const std::vector<Eigen::RowVectorXcd>& er, double budget, int draws,
                          std::uint64_t seed);

/// Best sum of sigmoid outputs over a (theta, phi) grid of full-power
/// beams, M_t = 2.
double grid_sigmoid_energy(const std::vector<Eigen::RowVectorXcd>& er, double budget,
                           const std::vector<wipt::SaturationParams>& s, int n_theta, int n_phi);

struct SampleMoments {
  double m2 = 0.0;
  double m4 = 0.0;
  double m2_se = 0.0;
  double m4_se = 0.0;
};
SampleMoments sample_moments(std::span<const cdouble> x);

}  // namespace oracle
