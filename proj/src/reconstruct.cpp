#include "stcsta/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace stcsta {

namespace {

constexpr double kRidge = 1e-8;
constexpr double kObsNoiseFloor = 1e-9;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void symmetrize(MatrixXd& a) { a = 0.5 * (a + a.transpose()).eval(); }

bool all_finite(const MatrixXd& a) { return a.allFinite(); }

// Solves S X = B for symmetric positive (semi-)definite S, retrying once with a ridge.
MatrixXd spd_solve(const MatrixXd& s, const MatrixXd& b, const char* what, std::vector<std::string>* diagnostics)
{
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) {
        MatrixXd x = llt.solve(b);
        if (all_finite(x))
            return x;
    }
    const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
    MatrixXd ridged = s + kRidge * scale * MatrixXd::Identity(s.rows(), s.cols());
    Eigen::LLT<MatrixXd> retry(ridged);
    if (retry.info() == Eigen::Success) {
        MatrixXd x = retry.solve(b);
        if (all_finite(x)) {
            if (diagnostics)
                diagnostics->push_back(fmt::format("{}: singular system, applied ridge {:g}", what, kRidge * scale));
            return x;
        }
    }
    throw NumericalError(fmt::format("{}: matrix not positive definite after ridge regularisation", what));
}

void check_shapes(const LdsModel& model, const MatrixXd& filled)
{
    const Index h = model.latent_dim();
    if (model.F.cols() != h || model.G.cols() != h || model.Q.rows() != h || model.Q.cols() != h ||
        model.Q0.rows() != h || model.Q0.cols() != h || model.mu0.size() != h ||
        model.r_diag.size() != model.G.rows())
        throw std::invalid_argument("LDS model matrices have inconsistent shapes");
    if (filled.rows() != model.n_streams())
        throw std::invalid_argument(
            fmt::format("data has {} streams, model expects {}", filled.rows(), model.n_streams()));
}

}  // namespace

int EmOptions::effective_latent_dim(std::size_t n_streams) const
{
    if (latent_dim > 0)
        return latent_dim;
    return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(15, n_streams)));
}

LdsModel init_model(std::size_t n_streams, const EmOptions& opts, const VectorXd& first_observation)
{
    const auto n = static_cast<Index>(n_streams);
    const Index h = opts.effective_latent_dim(n_streams);
    if (first_observation.size() != n)
        throw std::invalid_argument("first observation length does not match the stream count");

    LdsModel m;
    m.F = MatrixXd::Identity(h, h);
    m.G = MatrixXd::Zero(n, h);
    for (Index k = 0; k < std::min(n, h); ++k)
        m.G(k, k) = std::max(1.0, std::abs(first_observation(k)));
    m.mu0 = m.G.completeOrthogonalDecomposition().solve(first_observation);
    m.Q = MatrixXd::Identity(h, h);
    m.Q0 = MatrixXd::Identity(h, h);
    m.r_diag = VectorXd::Ones(n);
    return m;
}

Posterior e_step(const LdsModel& model, const MatrixXd& filled)
{
    check_shapes(model, filled);
    const Index n = filled.rows();
    const Index t_len = filled.cols();
    if (t_len == 0)
        throw std::invalid_argument("e_step needs at least one time step");
    const Index h = model.latent_dim();

    Posterior post;
    const VectorXd r_inv = model.r_diag.cwiseInverse();
    const MatrixXd gt_rinv = model.G.transpose() * r_inv.asDiagonal();  // H x N
    const MatrixXd info = gt_rinv * model.G;                             // G' R^-1 G
    const double log_det_r = model.r_diag.array().log().sum();
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    const MatrixXd eye = MatrixXd::Identity(h, h);

    std::vector<VectorXd> filt_mean(static_cast<std::size_t>(t_len));
    std::vector<MatrixXd> filt_cov(static_cast<std::size_t>(t_len));
    std::vector<MatrixXd> pred_cov(static_cast<std::size_t>(t_len));  // P_{t|t-1}

    VectorXd pred_mean = model.mu0;
    MatrixXd p = model.Q0;
    symmetrize(p);
    double ll = 0.0;

    for (Index t = 0; t < t_len; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        pred_cov[ti] = p;
        // Woodbury form: only H x H systems are factored.
        const VectorXd innov = filled.col(t) - model.G * pred_mean;
        const VectorXd b = gt_rinv * innov;
        const MatrixXd gain_sys = eye + p * info;
        Eigen::PartialPivLU<MatrixXd> lu(gain_sys);
        MatrixXd w = lu.solve(p);  // posterior covariance (P^-1 + G'R^-1G)^-1
        symmetrize(w);
        if (!all_finite(w))
            throw NumericalError(fmt::format("filter covariance not finite at step {}", t));

        double log_det_sys = 0.0;
        const MatrixXd& lu_mat = lu.matrixLU();
        for (Index k = 0; k < h; ++k)
            log_det_sys += std::log(std::abs(lu_mat(k, k)));
        const double quad = innov.dot(r_inv.cwiseProduct(innov)) - b.dot(w * b);
        ll += -0.5 * (static_cast<double>(n) * log_2pi + log_det_r + log_det_sys + quad);

        filt_mean[ti] = pred_mean + w * b;
        filt_cov[ti] = w;

        pred_mean = model.F * filt_mean[ti];
        p = model.F * w * model.F.transpose() + model.Q;
        symmetrize(p);
    }
    if (!std::isfinite(ll))
        throw NumericalError("log-likelihood is not finite");
    post.log_likelihood = ll;

    post.mean.resize(static_cast<std::size_t>(t_len));
    post.cov.resize(static_cast<std::size_t>(t_len));
    post.cross.resize(static_cast<std::size_t>(t_len - 1));
    const auto last = static_cast<std::size_t>(t_len - 1);
    post.mean[last] = filt_mean[last];
    post.cov[last] = filt_cov[last];

    for (Index t = t_len - 2; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        const MatrixXd& p_next = pred_cov[ti + 1];
        // J = V_t F' P_{t+1|t}^-1
        const MatrixXd jt = spd_solve(p_next, model.F * filt_cov[ti], "smoother gain", &post.diagnostics);
        const MatrixXd j = jt.transpose();
        post.mean[ti] = filt_mean[ti] + j * (post.mean[ti + 1] - model.F * filt_mean[ti]);
        MatrixXd v = filt_cov[ti] + j * (post.cov[ti + 1] - p_next) * jt;
        symmetrize(v);
        post.cov[ti] = std::move(v);
        post.cross[ti] = post.cov[ti + 1] * jt;
    }
    return post;
}

LdsModel m_step(const Posterior& post, const MatrixXd& filled, const LdsModel& previous,
                std::vector<std::string>* diagnostics)
{
    check_shapes(previous, filled);
    const Index n = filled.rows();
    const Index t_len = filled.cols();
    const Index h = previous.latent_dim();
    if (static_cast<Index>(post.mean.size()) != t_len)
        throw std::invalid_argument("posterior length does not match the data");

    MatrixXd s_all = MatrixXd::Zero(h, h);   // sum E[z_t z_t']
    MatrixXd s_prev = MatrixXd::Zero(h, h);  // t = 1..T-1
    MatrixXd s_next = MatrixXd::Zero(h, h);  // t = 2..T
    MatrixXd s_cross = MatrixXd::Zero(h, h); // sum E[z_t z_{t-1}']
    MatrixXd xz = MatrixXd::Zero(n, h);      // sum x_t E[z_t]'
    for (Index t = 0; t < t_len; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const VectorXd& mu = post.mean[ti];
        const MatrixXd ezz = post.cov[ti] + mu * mu.transpose();
        s_all += ezz;
        if (t + 1 < t_len) {
            s_prev += ezz;
            s_cross += post.cross[ti] + post.mean[ti + 1] * mu.transpose();
        }
        if (t > 0)
            s_next += ezz;
        xz.noalias() += filled.col(t) * mu.transpose();
    }

    LdsModel m;
    m.mu0 = post.mean.front();
    m.Q0 = post.cov.front();
    symmetrize(m.Q0);

    if (t_len > 1) {
        m.F = spd_solve(s_prev, s_cross.transpose(), "transition update", diagnostics).transpose();
        m.Q = (s_next - m.F * s_cross.transpose()) / static_cast<double>(t_len - 1);
        symmetrize(m.Q);
    } else {
        m.F = previous.F;
        m.Q = previous.Q;
    }

    m.G = spd_solve(s_all, xz.transpose(), "projection update", diagnostics).transpose();
    const VectorXd sq = filled.array().square().rowwise().sum();
    const VectorXd explained = (m.G.array() * xz.array()).rowwise().sum();
    m.r_diag = ((sq - explained) / static_cast<double>(t_len)).cwiseMax(kObsNoiseFloor);
    return m;
}

namespace {

struct Standardizer {
    VectorXd mean;
    VectorXd scale;
};

Standardizer fit_standardizer(const ReadingMatrix& m)
{
    const auto n = static_cast<Index>(m.n_streams());
    Standardizer s{VectorXd::Zero(n), VectorXd::Ones(n)};
    for (Index i = 0; i < n; ++i) {
        const auto row = m.row(static_cast<std::size_t>(i));
        double sum = 0.0;
        std::size_t count = 0;
        for (double v : row) {
            if (is_present(v)) {
                sum += v;
                ++count;
            }
        }
        if (count == 0)
            throw std::invalid_argument(
                fmt::format("stream {} has no present value", to_string(m.streams()[static_cast<std::size_t>(i)])));
        const double mu = sum / static_cast<double>(count);
        double ss = 0.0;
        for (double v : row)
            if (is_present(v))
                ss += (v - mu) * (v - mu);
        const double sd = std::sqrt(ss / static_cast<double>(count));
        s.mean(i) = mu;
        s.scale(i) = sd > 1e-12 * std::max(1.0, std::abs(mu)) ? sd : 1.0;
    }
    return s;
}

// Forward fill; a leading gap takes the first present value.
void fill_gaps_forward(MatrixXd& x, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& present)
{
    for (Index i = 0; i < x.rows(); ++i) {
        Index first = 0;
        while (first < x.cols() && !present(i, first))
            ++first;
        if (first == x.cols())
            continue;
        for (Index t = 0; t < first; ++t)
            x(i, t) = x(i, first);
        for (Index t = first + 1; t < x.cols(); ++t)
            if (!present(i, t))
                x(i, t) = x(i, t - 1);
    }
}

}  // namespace

Reconstruction reconstruct(const ReadingMatrix& sink, const EmOptions& opts, const std::optional<LdsModel>& initial)
{
    if (opts.max_iterations < 1)
        throw std::invalid_argument("max_iterations must be >= 1");
    if (!(opts.loglik_rel_tolerance > 0.0))
        throw std::invalid_argument("loglik_rel_tolerance must be > 0");
    const auto n = static_cast<Index>(sink.n_streams());
    const auto t_len = static_cast<Index>(sink.n_slots());
    if (n == 0 || t_len == 0)
        throw std::invalid_argument("reconstruct needs at least one stream and one slot");

    Reconstruction out;
    const Standardizer st = fit_standardizer(sink);

    MatrixXd x(n, t_len);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present(n, t_len);
    for (Index i = 0; i < n; ++i) {
        for (Index t = 0; t < t_len; ++t) {
            const double v = sink.at(static_cast<std::size_t>(i), static_cast<std::size_t>(t));
            present(i, t) = is_present(v);
            x(i, t) = present(i, t) ? (v - st.mean(i)) / st.scale(i) : 0.0;
        }
    }
    fill_gaps_forward(x, present);

    const int h = opts.effective_latent_dim(sink.n_streams());
    if (h > n)
        out.diagnostics.push_back(fmt::format("latent dimension {} exceeds stream count {}", h, n));
    LdsModel model = initial ? *initial : init_model(sink.n_streams(), opts, x.col(0));

    for (int it = 0; it < opts.max_iterations; ++it) {
        Posterior post;
        try {
            post = e_step(model, x);
        } catch (const NumericalError& e) {
            throw NumericalError(fmt::format("EM iteration {}: {}", it + 1, e.what()), out.loglik_trace);
        }
        out.diagnostics.insert(out.diagnostics.end(), post.diagnostics.begin(), post.diagnostics.end());
        out.loglik_trace.push_back(post.log_likelihood);
        out.iterations_used = it + 1;
        if (out.loglik_trace.size() >= 2) {
            const double prev = out.loglik_trace[out.loglik_trace.size() - 2];
            const double gain = post.log_likelihood - prev;
            if (gain < opts.loglik_rel_tolerance * std::max(1.0, std::abs(prev))) {
                out.converged = true;
                break;
            }
        }
        try {
            model = m_step(post, x, model, &out.diagnostics);
        } catch (const NumericalError& e) {
            throw NumericalError(fmt::format("EM iteration {}: {}", it + 1, e.what()), out.loglik_trace);
        }
        // Refill with the updated projection of the current posterior means.
        for (Index t = 0; t < t_len; ++t) {
            const auto& mu = post.mean[static_cast<std::size_t>(t)];
            for (Index i = 0; i < n; ++i)
                if (!present(i, t))
                    x(i, t) = model.G.row(i).dot(mu);
        }
    }

    std::vector<double> vals = sink.values();
    for (Index i = 0; i < n; ++i) {
        for (Index t = 0; t < t_len; ++t) {
            if (!present(i, t))
                vals[static_cast<std::size_t>(i * t_len + t)] = x(i, t) * st.scale(i) + st.mean(i);
        }
    }
    out.completed = ReadingMatrix(sink.streams(), sink.timestamps(), std::move(vals));
    out.model = std::move(model);
    return out;
}

ReadingMatrix fill_with_model(const LdsModel& model, const ReadingMatrix& sink, int max_sweeps, double tolerance)
{
    const auto n = static_cast<Index>(sink.n_streams());
    const auto t_len = static_cast<Index>(sink.n_slots());
    MatrixXd x(n, t_len);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present(n, t_len);
    for (Index i = 0; i < n; ++i)
        for (Index t = 0; t < t_len; ++t) {
            const double v = sink.at(static_cast<std::size_t>(i), static_cast<std::size_t>(t));
            present(i, t) = is_present(v);
            x(i, t) = present(i, t) ? v : 0.0;
        }
    fill_gaps_forward(x, present);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const Posterior post = e_step(model, x);
        double change = 0.0;
        for (Index t = 0; t < t_len; ++t)
            for (Index i = 0; i < n; ++i)
                if (!present(i, t)) {
                    const double v = model.G.row(i).dot(post.mean[static_cast<std::size_t>(t)]);
                    change = std::max(change, std::abs(v - x(i, t)));
                    x(i, t) = v;
                }
        if (change <= tolerance)
            break;
    }

    std::vector<double> vals = sink.values();
    for (Index i = 0; i < n; ++i)
        for (Index t = 0; t < t_len; ++t)
            if (!present(i, t))
                vals[static_cast<std::size_t>(i * t_len + t)] = x(i, t);
    return ReadingMatrix(sink.streams(), sink.timestamps(), std::move(vals));
}

SinkReconstruction reconstruct_sink(const ReadingMatrix& sink, const ReconstructConfig& config)
{
    if (config.slots_per_round < 1 || config.window_rounds < 0)
        throw std::invalid_argument("reconstruction needs slots_per_round >= 1 and window_rounds >= 0");
    const std::size_t t_len = sink.n_slots();
    const std::size_t window = config.window_rounds == 0
                                   ? t_len
                                   : static_cast<std::size_t>(config.window_rounds) *
                                         static_cast<std::size_t>(config.slots_per_round);

    std::vector<std::vector<std::size_t>> blocks;
    if (config.blocks == ReconstructionBlocks::Joint) {
        blocks.emplace_back(sink.n_streams());
        for (std::size_t i = 0; i < sink.n_streams(); ++i)
            blocks.back()[i] = i;
    } else {
        for (Feature f : kAllFeatures) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < sink.n_streams(); ++i)
                if (sink.streams()[i].feature == f)
                    rows.push_back(i);
            if (!rows.empty())
                blocks.push_back(std::move(rows));
        }
    }

    SinkReconstruction out;
    std::vector<double> vals = sink.values();
    for (std::size_t first = 0; first < t_len; first += window) {
        const std::size_t count = std::min(window, t_len - first);
        const ReadingMatrix piece = sink.slice(first, count);
        for (const auto& rows : blocks) {
            const ReadingMatrix job = piece.select_rows(rows);
            auto rec = reconstruct(job, config.em);
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t k = 0; k < count; ++k)
                    vals[rows[r] * t_len + first + k] = rec.completed.at(r, k);
            out.loglik_traces.push_back(std::move(rec.loglik_trace));
            for (auto& d : rec.diagnostics)
                out.diagnostics.push_back(fmt::format("window at slot {}: {}", first, d));
        }
    }
    out.completed = ReadingMatrix(sink.streams(), sink.timestamps(), std::move(vals));
    return out;
}

}  // namespace stcsta
