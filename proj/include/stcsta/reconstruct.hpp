#pragma once

// Sink-side reconstruction of non-sampled cells with a linear-Gaussian dynamical system
//
//   z_1 ~ N(mu0, Q0),   z_t = F z_{t-1} + w_t,  w_t ~ N(0, Q)
//   x_t = G z_t + v_t,  v_t ~ N(0, R),  R diagonal
//
// fitted by expectation-maximisation. Missing cells are handled by alternating an exact
// Kalman filter / RTS smoother pass over the currently filled matrix with closed-form
// parameter updates, then refilling the missing cells with G E[z_t].

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcsta/core.hpp"

namespace stcsta {

struct LdsModel {
    Eigen::MatrixXd F;       // H x H transition
    Eigen::MatrixXd G;       // N x H projection
    Eigen::MatrixXd Q;       // H x H process noise
    Eigen::VectorXd r_diag;  // diagonal of the N x N observation noise
    Eigen::VectorXd mu0;     // H initial mean
    Eigen::MatrixXd Q0;      // H x H initial covariance

    Eigen::Index latent_dim() const { return F.rows(); }
    Eigen::Index n_streams() const { return G.rows(); }
};

struct EmOptions {
    int max_iterations = 100;
    double loglik_rel_tolerance = 1e-4;
    int latent_dim = 0;  // 0 selects min(15, N)

    int effective_latent_dim(std::size_t n_streams) const;
};

class NumericalError : public std::runtime_error {
  public:
    NumericalError(const std::string& what, std::vector<double> partial_trace = {})
        : std::runtime_error(what), partial_trace(std::move(partial_trace))
    {
    }
    std::vector<double> partial_trace;
};

// F = I, G = first H basis directions scaled by max(1, |first_observation_h|),
// mu0 = least-squares solution of G mu0 = first_observation, Q = Q0 = I, R = I.
LdsModel init_model(std::size_t n_streams, const EmOptions& opts, const Eigen::VectorXd& first_observation);

struct Posterior {
    std::vector<Eigen::VectorXd> mean;   // E[z_t | x_1..T]
    std::vector<Eigen::MatrixXd> cov;    // Cov(z_t | x_1..T)
    std::vector<Eigen::MatrixXd> cross;  // cross[t] = Cov(z_{t+1}, z_t | x_1..T), size T - 1
    double log_likelihood = 0.0;
    std::vector<std::string> diagnostics;
};

// Exact forward-backward pass over a dense N x T matrix (columns are time steps).
// Throws std::invalid_argument for T == 0 or a shape mismatch, NumericalError when a
// covariance cannot be factored even after ridge regularisation.
Posterior e_step(const LdsModel& model, const Eigen::MatrixXd& filled);

// Closed-form maximisers of the expected complete-data log-likelihood. F and Q are kept
// from `previous` when T == 1. Singular normal equations get a 1e-8 ridge, noted in
// `diagnostics` when provided.
LdsModel m_step(const Posterior& posterior, const Eigen::MatrixXd& filled, const LdsModel& previous,
                std::vector<std::string>* diagnostics = nullptr);

struct Reconstruction {
    ReadingMatrix completed;
    std::vector<double> loglik_trace;
    int iterations_used = 0;
    bool converged = false;
    LdsModel model;  // in standardised units
    std::vector<std::string> diagnostics;
};

// Streams are standardised over their present cells before fitting. Present cells are
// copied through untouched. Throws std::invalid_argument when a stream has no present
// value; NumericalError (with the partial trace) on numerical failure.
Reconstruction reconstruct(const ReadingMatrix& sink_matrix, const EmOptions& opts,
                           const std::optional<LdsModel>& initial_model = std::nullopt);

// Fixed-model imputation in raw units: iterates missing = G E[z | filled] to its fixed point,
// which is the conditional mean of the missing cells given the present ones.
ReadingMatrix fill_with_model(const LdsModel& model, const ReadingMatrix& sink_matrix, int max_sweeps = 100000,
                              double tolerance = 1e-14);

enum class ReconstructionBlocks { Joint, PerFeature };

struct ReconstructConfig {
    EmOptions em;
    ReconstructionBlocks blocks = ReconstructionBlocks::Joint;
    int slots_per_round = 50;
    int window_rounds = 0;  // 0: all rounds in one window
};

struct SinkReconstruction {
    ReadingMatrix completed;
    std::vector<std::vector<double>> loglik_traces;  // one per (window, block) job
    std::vector<std::string> diagnostics;
};

// Splits the sink matrix into windows of `window_rounds` rounds and, optionally, per-feature
// row blocks, reconstructing each job independently.
SinkReconstruction reconstruct_sink(const ReadingMatrix& sink_matrix, const ReconstructConfig& config);

}  // namespace stcsta
