#pragma once

// Gain synthesis for the scale-free observer-based protocol and the per-agent
// protocol blocks. All gains depend only on the target model; the tuning
// parameter eps is bound when a block is assembled.

#include <optional>
#include <string>
#include <vector>

#include "synctool/homog.hpp"
#include "synctool/numlin.hpp"

namespace synctool::protocol {

enum class SyncMode { kOutputSync, kRegulated };

struct ProtocolParams {
  homog::TargetModel target;
  Matrix F;      // p x p n_q, Abar - Bbar F Hurwitz
  Matrix K1;     // p x p symmetric
  Matrix K2;     // p(n_q - 1) x p
  double alpha = 0.0;
  Matrix P;      // Lyapunov certificate for Abar1 + Bbar1 Gamma2 - K2 Cbar1 with Q = 3 I
  Matrix Psi;
  std::vector<std::string> warnings;

  Matrix K() const;  // (K1; K2 K1)
  // Checks every invariant except the K1 bound, which only warns.
  void validate() const;
};

// Empty fields fall back to defaults: F and K2 poles {-2, -3, ...} on every
// channel, K1 = (alpha / 2 + alpha_margin) I. An explicit K1 that does not
// exceed alpha / 2 is kept and recorded as a warning.
struct GainSpec {
  std::optional<Matrix> F;
  std::vector<numlin::Complex> F_poles;
  std::optional<Matrix> K2;
  std::vector<numlin::Complex> K2_poles;
  std::optional<Matrix> K1;
  double alpha_margin = 1.0;
};

// Pole lists: either n_q poles (applied to every channel) or p n_q poles for
// F; p(n_q - 1) poles for K2.
ProtocolParams design_gains(const homog::TargetModel& target, const std::vector<numlin::Complex>& F_poles,
                            const std::vector<numlin::Complex>& K2_poles, double alpha_margin = 1.0);
ProtocolParams design_gains(const homog::TargetModel& target, const GainSpec& spec);

// alpha = 1 + 2 |C1 K2| + |P Psi|^2 + |C1|^2 for a given K2 and certificate P.
double compute_alpha(const homog::TargetModel& target, const Matrix& K2, const Matrix& P);
Matrix compute_psi(const homog::TargetModel& target, const Matrix& K2);

// diag(I_p, eps I_p, ..., eps^{n_q-1} I_p).
Matrix build_delta(const ProtocolParams& params, double eps);
Matrix build_delta(int p, int n_q, double eps);

// [[I_p, 0], [-eps K2, eps I]] and the scaled observer error matrix
// [[-K1/eps + C1 K2, C1/eps], [eps Psi, A1 + B1 Gamma2 - K2 C1]].
Matrix delta_bar(const ProtocolParams& params, double eps);
Matrix observer_error_matrix(const ProtocolParams& params, double eps);

// State (xhat, chi); inputs (zeta, zeta_hat); outputs (v, chi).
struct ProtocolBlock {
  StateSpace dyn;
  SyncMode mode = SyncMode::kOutputSync;
  bool iota = false;
  double eps = 1.0;
};

ProtocolBlock assemble_protocol_block(const ProtocolParams& params, double eps, SyncMode mode, bool iota);

}  // namespace synctool::protocol
