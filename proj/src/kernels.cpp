#include "glee/kernels.hpp"

#include <cmath>
#include <string>

#include "glee/error.hpp"

namespace glee {

namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

RealMatrix linear_forward(const RealMatrix& x, const RealMatrix& w, const RealMatrix& b) {
    if (x.cols != w.rows) {
        throw DimensionError("linear_forward: x is " + std::to_string(x.rows) + "x" +
                             std::to_string(x.cols) + " but w has " +
                             std::to_string(w.rows) + " rows");
    }
    require_shape(b, 1, w.cols, "linear_forward bias");
    RealMatrix out(x.rows, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* o = out.row(i);
        for (std::size_t k = 0; k < w.cols; ++k) o[k] = b.at(0, k);
        const double* xi = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double xv = xi[j];
            const double* wj = w.row(j);
            for (std::size_t k = 0; k < w.cols; ++k) o[k] += xv * wj[k];
        }
    }
    return out;
}

LinearGrads linear_backward(const RealMatrix& x, const RealMatrix& w, const RealMatrix& dout) {
    require_shape(dout, x.rows, w.cols, "linear_backward dout");
    LinearGrads g;
    g.dx = RealMatrix(x.rows, x.cols);
    g.dw = RealMatrix(w.rows, w.cols);
    g.db = RealMatrix(1, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* d = dout.row(i);
        const double* xi = x.row(i);
        double* dxi = g.dx.row(i);
        for (std::size_t k = 0; k < w.cols; ++k) g.db.at(0, k) += d[k];
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double* wj = w.row(j);
            double* dwj = g.dw.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < w.cols; ++k) {
                acc += d[k] * wj[k];
                dwj[k] += xi[j] * d[k];
            }
            dxi[j] = acc;
        }
    }
    return g;
}

double activation_scalar(double x, Activation kind) {
    switch (kind) {
        case Activation::Tanh:
            return std::tanh(x);
        case Activation::ReLU:
            return x > 0.0 ? x : 0.0;
        case Activation::Gelu: {
            double u = kGeluScale * (x + kGeluCubic * x * x * x);
            return 0.5 * x * (1.0 + std::tanh(u));
        }
    }
    return 0.0;
}

RealMatrix activation_forward(const RealMatrix& x, Activation kind) {
    RealMatrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = activation_scalar(x.data[i], kind);
    }
    return out;
}

RealMatrix activation_backward(const RealMatrix& x, const RealMatrix& dout, Activation kind) {
    if (!x.same_shape(dout)) throw DimensionError("activation_backward: shape mismatch");
    RealMatrix dx(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        double d = 0.0;
        switch (kind) {
            case Activation::Tanh: {
                double t = std::tanh(v);
                d = 1.0 - t * t;
                break;
            }
            case Activation::ReLU:
                d = v > 0.0 ? 1.0 : 0.0;
                break;
            case Activation::Gelu: {
                double u = kGeluScale * (v + kGeluCubic * v * v * v);
                double t = std::tanh(u);
                double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * v * v);
                d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
                break;
            }
        }
        dx.data[i] = dout.data[i] * d;
    }
    return dx;
}

RealMatrix layer_norm_forward(const RealMatrix& x, const RealMatrix& gamma,
                              const RealMatrix& beta, double eps, LayerNormCache* cache) {
    require_shape(gamma, 1, x.cols, "layer_norm gamma");
    require_shape(beta, 1, x.cols, "layer_norm beta");
    const std::size_t d = x.cols;
    RealMatrix out(x.rows, d);
    if (cache) {
        cache->x_hat = RealMatrix(x.rows, d);
        cache->inv_std.assign(x.rows, 0.0);
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xi[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = xi[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double inv_std = 1.0 / std::sqrt(var + eps);
        double* o = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (xi[j] - mean) * inv_std;
            o[j] = xh * gamma.at(0, j) + beta.at(0, j);
            if (cache) cache->x_hat.at(i, j) = xh;
        }
        if (cache) cache->inv_std[i] = inv_std;
    }
    return out;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const RealMatrix& gamma,
                                   const RealMatrix& dout) {
    const std::size_t n = cache.x_hat.rows;
    const std::size_t d = cache.x_hat.cols;
    require_shape(dout, n, d, "layer_norm_backward dout");
    LayerNormGrads g;
    g.dx = RealMatrix(n, d);
    g.dgamma = RealMatrix(1, d);
    g.dbeta = RealMatrix(1, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* dy = dout.row(i);
        const double* xh = cache.x_hat.row(i);
        double sum_g = 0.0;     // mean of dy*gamma
        double sum_gx = 0.0;    // mean of dy*gamma*x_hat
        for (std::size_t j = 0; j < d; ++j) {
            double gj = dy[j] * gamma.at(0, j);
            sum_g += gj;
            sum_gx += gj * xh[j];
            g.dgamma.at(0, j) += dy[j] * xh[j];
            g.dbeta.at(0, j) += dy[j];
        }
        sum_g /= static_cast<double>(d);
        sum_gx /= static_cast<double>(d);
        double* dx = g.dx.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double gj = dy[j] * gamma.at(0, j);
            dx[j] = cache.inv_std[i] * (gj - sum_g - xh[j] * sum_gx);
        }
    }
    return g;
}

RealMatrix softmax_rows(const RealMatrix& logits) {
    RealMatrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* z = logits.row(i);
        double m = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        double* pi = p.row(i);
        for (std::size_t j = 0; j < logits.cols; ++j) {
            pi[j] = std::exp(z[j] - m);
            sum += pi[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) pi[j] /= sum;
    }
    return p;
}

SoftmaxCrossEntropyResult softmax_cross_entropy(const RealMatrix& logits,
                                                const std::vector<int>& targets) {
    if (targets.size() != logits.rows) {
        throw DimensionError("softmax_cross_entropy: targets size mismatch");
    }
    const std::size_t n = logits.rows;
    const std::size_t c = logits.cols;
    SoftmaxCrossEntropyResult res;
    res.dlogits = RealMatrix(n, c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= c) {
            throw IndexError("softmax_cross_entropy: target " + std::to_string(t) +
                             " out of range for " + std::to_string(c) + " classes");
        }
        const double* z = logits.row(i);
        double m = z[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - m);
        double lse = m + std::log(sum);
        total += lse - z[t];
        double* d = res.dlogits.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            d[j] = std::exp(z[j] - lse) / static_cast<double>(n);
        }
        d[t] -= 1.0 / static_cast<double>(n);
    }
    res.loss = total / static_cast<double>(n);
    return res;
}

RealMatrix predictor_forward(const RealMatrix& h, const RealMatrix& p,
                             const RealMatrix* bias) {
    if (h.cols != p.cols) {
        throw DimensionError("predictor_forward: feature dim " + std::to_string(h.cols) +
                             " vs weight dim " + std::to_string(p.cols));
    }
    if (bias) require_shape(*bias, 1, p.rows, "predictor bias");
    RealMatrix out(h.rows, p.rows);
    for (std::size_t i = 0; i < h.rows; ++i) {
        const double* hi = h.row(i);
        double* o = out.row(i);
        for (std::size_t k = 0; k < p.rows; ++k) {
            const double* pk = p.row(k);
            double acc = bias ? bias->at(0, k) : 0.0;
            for (std::size_t j = 0; j < h.cols; ++j) acc += hi[j] * pk[j];
            o[k] = acc;
        }
    }
    return out;
}

PredictorGrads predictor_backward(const RealMatrix& h, const RealMatrix& p,
                                  const RealMatrix& dout, bool want_bias) {
    require_shape(dout, h.rows, p.rows, "predictor_backward dout");
    PredictorGrads g;
    g.dh = RealMatrix(h.rows, h.cols);
    g.dp = RealMatrix(p.rows, p.cols);
    if (want_bias) g.dbias = RealMatrix(1, p.rows);
    for (std::size_t i = 0; i < h.rows; ++i) {
        const double* hi = h.row(i);
        const double* d = dout.row(i);
        double* dhi = g.dh.row(i);
        for (std::size_t k = 0; k < p.rows; ++k) {
            const double dk = d[k];
            if (want_bias) g.dbias.at(0, k) += dk;
            const double* pk = p.row(k);
            double* dpk = g.dp.row(k);
            for (std::size_t j = 0; j < h.cols; ++j) {
                dhi[j] += dk * pk[j];
                dpk[j] += dk * hi[j];
            }
        }
    }
    return g;
}

}  // namespace glee
