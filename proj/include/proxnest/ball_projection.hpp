#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxnest/potentials.hpp"

namespace proxnest {

struct AdmmConfig {
  double beta = 1.0;
  int max_iter = 200;
  double rel_tol = 1e-5;
  double cg_tol = 1e-10;
  int cg_max_iter = 500;
  void validate() const;
};

struct PdConfig {
  double delta1 = 0.95;
  double delta2 = 0.95;
  double delta3 = 1.0;
  int max_iter = 300;
  double rel_tol = 1e-5;
  /// Checks delta1*delta2*||Phi||^2 <= 1 and delta3 in [0,1].
  void validate(double op_norm) const;
};

struct ProjectionResult {
  Vec x;
  Vec dual;  // final dual variable, reusable as a warm start
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
  std::vector<double> objective_trace;  // ||x_i - x'||^2, filled only on request
};

/// Optional starting point carried over from a previous call.
struct WarmStart {
  Vec x;
  Vec dual;
};

/// Closed form for Phi = I: ball of radius sqrt(2 tau sigma^2) about y.
ProjectionResult project_identity(const LikelihoodBall& ball, std::span<const double> x);

ProjectionResult admm_project(const LikelihoodBall& ball, std::span<const double> x_prime,
                              const AdmmConfig& cfg, const WarmStart* warm = nullptr);

ProjectionResult pd_project(const LikelihoodBall& ball, std::span<const double> x_prime,
                            const PdConfig& cfg, const WarmStart* warm = nullptr,
                            bool record_objective = false);

struct NormalSolveResult {
  Vec x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

/// Solves (beta Phi^T Phi + I) x = rhs, by the operator's closed form when it
/// has one and by conjugate gradients otherwise.
NormalSolveResult solve_normal_system(const LinearOperator& op, double beta,
                                      std::span<const double> rhs, double tol, int max_iter);
/// Always conjugate gradients.
NormalSolveResult cg_normal_system(const LinearOperator& op, double beta,
                                   std::span<const double> rhs, double tol, int max_iter);

enum class ProjectionMethod { Auto, Identity, Admm, PrimalDual };

ProjectionMethod parse_projection_method(const std::string& s);

struct ProjectorConfig {
  ProjectionMethod method = ProjectionMethod::Auto;
  AdmmConfig admm;
  PdConfig pd;
};

/// Dispatches to the configured solver; Auto picks the closed form for an
/// identity operator and primal-dual otherwise.
ProjectionResult project_to_ball(const LikelihoodBall& ball, std::span<const double> x,
                                 const ProjectorConfig& cfg, const WarmStart* warm = nullptr);

}  // namespace proxnest
