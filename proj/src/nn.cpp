#include "marlns/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "marlns/parallel.hpp"

namespace marlns {

std::vector<double> orthogonal_init(int rows, int cols, double gain, Rng& rng) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("orthogonal_init: bad shape");
    const bool transpose = rows < cols;
    const int n = transpose ? cols : rows;  // tall matrix n x k, n >= k
    const int k = transpose ? rows : cols;

    // column-major columns of the tall working matrix
    std::vector<std::vector<double>> a(static_cast<std::size_t>(k),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& col : a)
        for (auto& x : col) x = rng.normal();

    // modified Gram-Schmidt, two passes per column
    for (int j = 0; j < k; ++j) {
        auto& cj = a[static_cast<std::size_t>(j)];
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < j; ++i) {
                const auto& ci = a[static_cast<std::size_t>(i)];
                double dot = 0.0;
                for (int r = 0; r < n; ++r) dot += ci[static_cast<std::size_t>(r)] * cj[static_cast<std::size_t>(r)];
                for (int r = 0; r < n; ++r) cj[static_cast<std::size_t>(r)] -= dot * ci[static_cast<std::size_t>(r)];
            }
        }
        double norm = 0.0;
        for (double x : cj) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw std::runtime_error("orthogonal_init: degenerate random matrix");
        // sign fix keeps the distribution consistent with the QR convention
        const double sign = cj[static_cast<std::size_t>(j)] >= 0.0 ? 1.0 : -1.0;
        for (double& x : cj) x = x / norm * sign;
    }

    std::vector<double> w(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double q = transpose ? a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                                       : a[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
            w[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                gain * q;
        }
    }
    return w;
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip_grad_norm: max_norm must be > 0");
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

Mlp::Mlp(std::vector<int> dims, std::string name) : dims_(std::move(dims)), name_(std::move(name)) {
    if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
    for (int d : dims_)
        if (d < 1) throw std::invalid_argument("Mlp: all layer dims must be >= 1");

    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        const int in = dims_[l];
        const int out = dims_[l + 1];
        TensorInfo w;
        w.name = name_ + ".layer" + std::to_string(l) + ".W";
        w.rows = out;
        w.cols = in;
        w.offset = offset;
        w.size = static_cast<std::size_t>(out) * static_cast<std::size_t>(in);
        offset += w.size;
        TensorInfo b;
        b.name = name_ + ".layer" + std::to_string(l) + ".b";
        b.rows = out;
        b.cols = 0;
        b.offset = offset;
        b.size = static_cast<std::size_t>(out);
        offset += b.size;
        tensors_.push_back(std::move(w));
        tensors_.push_back(std::move(b));
    }
    theta_.assign(offset, 0.0);
}

void Mlp::init_orthogonal(double hidden_gain, double head_gain, Rng& rng) {
    const std::size_t n_layers = dims_.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const bool last = (l + 1 == n_layers);
        const double gain = last ? head_gain : hidden_gain;
        const TensorInfo& w = tensors_[2 * l];
        const auto mat = orthogonal_init(w.rows, w.cols, gain, rng);
        std::copy(mat.begin(), mat.end(), theta_.begin() + static_cast<std::ptrdiff_t>(w.offset));
        const TensorInfo& b = tensors_[2 * l + 1];
        std::fill_n(theta_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size, 0.0);
    }
}

void Mlp::forward_rows(const double* x, int row_begin, int row_end, double* y,
                       ForwardCache* cache) const {
    const std::size_t n_layers = dims_.size() - 1;
    std::vector<double> cur(static_cast<std::size_t>(*std::max_element(dims_.begin(), dims_.end())));
    std::vector<double> nxt(cur.size());

    for (int r = row_begin; r < row_end; ++r) {
        const double* in = x + static_cast<std::size_t>(r) * static_cast<std::size_t>(dims_[0]);
        std::copy_n(in, dims_[0], cur.begin());
        for (std::size_t l = 0; l < n_layers; ++l) {
            const int ni = dims_[l];
            const int no = dims_[l + 1];
            const double* w = theta_.data() + tensors_[2 * l].offset;
            const double* b = theta_.data() + tensors_[2 * l + 1].offset;
            const bool last = (l + 1 == n_layers);
            for (int j = 0; j < no; ++j) {
                const double* wr = w + static_cast<std::size_t>(j) * static_cast<std::size_t>(ni);
                double acc = b[j];
                for (int i = 0; i < ni; ++i) acc += wr[i] * cur[static_cast<std::size_t>(i)];
                nxt[static_cast<std::size_t>(j)] = last ? acc : std::tanh(acc);
            }
            if (cache) {
                double* dst = cache->acts[l + 1].data() +
                              static_cast<std::size_t>(r) * static_cast<std::size_t>(no);
                std::copy_n(nxt.begin(), no, dst);
            }
            std::swap(cur, nxt);
        }
        std::copy_n(cur.begin(), dims_.back(), y + static_cast<std::size_t>(r) * static_cast<std::size_t>(dims_.back()));
    }
}

void Mlp::forward(const double* x, int batch, double* y, ForwardCache* cache) const {
    if (batch < 0) throw std::invalid_argument("Mlp::forward: negative batch");
    if (cache) {
        cache->batch = batch;
        cache->acts.resize(dims_.size());
        for (std::size_t l = 0; l < dims_.size(); ++l)
            cache->acts[l].resize(static_cast<std::size_t>(batch) * static_cast<std::size_t>(dims_[l]));
        std::copy_n(x, static_cast<std::size_t>(batch) * static_cast<std::size_t>(dims_[0]),
                    cache->acts[0].begin());
    }
#ifdef _OPENMP
    if (exec_mode() == ExecMode::OpenMP && batch > 1) {
#pragma omp parallel
        {
            const int nt = omp_get_num_threads();
            const int tid = omp_get_thread_num();
            const int chunk = (batch + nt - 1) / nt;
            const int lo = std::min(batch, tid * chunk);
            const int hi = std::min(batch, lo + chunk);
            forward_rows(x, lo, hi, y, cache);
        }
        return;
    }
#endif
    forward_rows(x, 0, batch, y, cache);
}

std::vector<double> Mlp::forward_one(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dims_.front())
        throw std::invalid_argument("Mlp::forward_one: input width mismatch on " + name_);
    std::vector<double> y(static_cast<std::size_t>(dims_.back()));
    forward_rows(x.data(), 0, 1, y.data(), nullptr);
    return y;
}

void Mlp::backward_rows(const ForwardCache& cache, const double* dy, int row_begin, int row_end,
                        double* grad, double* dx) const {
    const std::size_t n_layers = dims_.size() - 1;
    std::vector<double> delta(static_cast<std::size_t>(*std::max_element(dims_.begin(), dims_.end())));
    std::vector<double> delta_prev(delta.size());

    for (int r = row_begin; r < row_end; ++r) {
        std::copy_n(dy + static_cast<std::size_t>(r) * static_cast<std::size_t>(dims_.back()),
                    dims_.back(), delta.begin());
        for (std::size_t li = n_layers; li-- > 0;) {
            const int ni = dims_[li];
            const int no = dims_[li + 1];
            const bool last = (li + 1 == n_layers);
            const double* act_out = cache.acts[li + 1].data() +
                                    static_cast<std::size_t>(r) * static_cast<std::size_t>(no);
            const double* act_in = cache.acts[li].data() +
                                   static_cast<std::size_t>(r) * static_cast<std::size_t>(ni);
            if (!last) {
                for (int j = 0; j < no; ++j)
                    delta[static_cast<std::size_t>(j)] *= 1.0 - act_out[j] * act_out[j];
            }
            double* gw = grad + tensors_[2 * li].offset;
            double* gb = grad + tensors_[2 * li + 1].offset;
            const double* w = theta_.data() + tensors_[2 * li].offset;
            std::fill_n(delta_prev.begin(), ni, 0.0);
            for (int j = 0; j < no; ++j) {
                const double d = delta[static_cast<std::size_t>(j)];
                double* gwr = gw + static_cast<std::size_t>(j) * static_cast<std::size_t>(ni);
                const double* wr = w + static_cast<std::size_t>(j) * static_cast<std::size_t>(ni);
                for (int i = 0; i < ni; ++i) {
                    gwr[i] += d * act_in[i];
                    delta_prev[static_cast<std::size_t>(i)] += d * wr[i];
                }
                gb[j] += d;
            }
            std::swap(delta, delta_prev);
        }
        if (dx) {
            std::copy_n(delta.begin(), dims_.front(),
                        dx + static_cast<std::size_t>(r) * static_cast<std::size_t>(dims_.front()));
        }
    }
}

void Mlp::backward(const ForwardCache& cache, const double* dy, std::vector<double>& grad,
                   double* dx) const {
    if (grad.size() != theta_.size())
        throw std::invalid_argument("Mlp::backward: gradient buffer size mismatch");
    if (cache.acts.size() != dims_.size() ||
        cache.acts[0].size() != static_cast<std::size_t>(cache.batch) * static_cast<std::size_t>(dims_[0]))
        throw std::invalid_argument("Mlp::backward: stale or mismatched cache");
    const int batch = cache.batch;
#ifdef _OPENMP
    if (exec_mode() == ExecMode::OpenMP && batch > 1) {
        const int nt = exec_threads();
        std::vector<std::vector<double>> partial(static_cast<std::size_t>(nt));
#pragma omp parallel num_threads(nt)
        {
            const int tid = omp_get_thread_num();
            auto& mine = partial[static_cast<std::size_t>(tid)];
            mine.assign(theta_.size(), 0.0);
            const int chunk = (batch + nt - 1) / nt;
            const int lo = std::min(batch, tid * chunk);
            const int hi = std::min(batch, lo + chunk);
            backward_rows(cache, dy, lo, hi, mine.data(), dx);
        }
        // merge in thread order: deterministic for a fixed thread count
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grad.size()); ++i)
            for (const auto& p : partial) grad[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i)];
        return;
    }
#endif
    backward_rows(cache, dy, 0, batch, grad.data(), dx);
}

void AdamState::step(std::span<double> params, std::span<const double> grads, const AdamConfig& cfg,
                     double lr_scale, const std::vector<TensorInfo>* layout) {
    if (params.size() != grads.size() || params.size() != m_.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            std::string where = "parameter index " + std::to_string(i);
            if (layout) {
                for (const auto& t : *layout) {
                    if (i >= t.offset && i < t.offset + t.size) {
                        where = t.name;
                        break;
                    }
                }
            }
            throw std::runtime_error("adam_step: non-finite gradient in " + where);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    const double lr = cfg.lr * lr_scale;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        if (cfg.weight_decay != 0.0) g += cfg.weight_decay * params[i];
        m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
        v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

std::vector<NamedTensorView> named_tensors(Mlp& net, const std::string& prefix) {
    std::vector<NamedTensorView> out;
    for (const auto& t : net.tensors()) {
        NamedTensorView v;
        v.name = prefix.empty() ? t.name : prefix + "." + t.name;
        if (t.cols > 0)
            v.shape = {t.rows, t.cols};
        else
            v.shape = {t.rows};
        v.data = net.params().data() + t.offset;
        v.size = t.size;
        out.push_back(std::move(v));
    }
    return out;
}

void save_tensors(const std::string& path, const std::vector<NamedTensorView>& tensors) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_tensors: cannot open " + path);
    f << "marlns-params 1\n" << tensors.size() << "\n";
    char buf[32];
    for (const auto& t : tensors) {
        f << t.name;
        f << " " << t.shape.size();
        for (int d : t.shape) f << " " << d;
        f << "\n";
        for (std::size_t i = 0; i < t.size; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", t.data[i]);
            f << buf << (i + 1 == t.size ? '\n' : ' ');
        }
    }
    if (!f) throw std::runtime_error("save_tensors: write failed for " + path);
}

void load_tensors(const std::string& path, std::vector<NamedTensorView>& tensors) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_tensors: cannot open " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "marlns-params" || version != 1)
        throw std::runtime_error("load_tensors: unrecognized format in " + path);
    std::size_t count = 0;
    f >> count;
    if (count != tensors.size())
        throw std::runtime_error("load_tensors: tensor count mismatch in " + path);
    for (auto& t : tensors) {
        std::string name;
        std::size_t rank = 0;
        f >> name >> rank;
        std::vector<int> shape(rank);
        for (auto& d : shape) f >> d;
        if (name != t.name || shape != t.shape)
            throw std::runtime_error("load_tensors: tensor " + t.name + " mismatches file entry " + name);
        for (std::size_t i = 0; i < t.size; ++i) f >> t.data[i];
    }
    if (!f) throw std::runtime_error("load_tensors: truncated file " + path);
}

}  // namespace marlns
