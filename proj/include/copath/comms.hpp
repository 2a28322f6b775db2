#pragma once

#include <cmath>

#include "copath/core.hpp"
#include "copath/rng.hpp"

namespace copath {

/// Central communicator: a projection W_c of the concatenated action/observation
/// embeddings followed by an LSTM cell. Gate rows are stacked [input; forget; output; candidate].
struct CommParams {
    Matrix proj;   // d_in x input_width (4d shared, 2d private)
    Matrix gates;  // 4 d_h x (d_in + d_h)
    Vector bias;   // 4 d_h

    int input_width() const { return static_cast<int>(proj.cols()); }
    int d_in() const { return static_cast<int>(proj.rows()); }
    int d_h() const { return static_cast<int>(gates.rows() / 4); }

    static CommParams zeros(int input_width, int d_in, int d_h) {
        return {Matrix::Zero(d_in, input_width), Matrix::Zero(4 * d_h, d_in + d_h), Vector::Zero(4 * d_h)};
    }

    /// Weights uniform in [-scale, scale]; forget-gate bias 1, other biases 0.
    static CommParams random(int input_width, int d_in, int d_h, Engine& rng, double scale = 0.1) {
        CommParams p = zeros(input_width, d_in, d_h);
        for (Eigen::Index i = 0; i < p.proj.size(); ++i) p.proj.data()[i] = uniform(rng, -scale, scale);
        for (Eigen::Index i = 0; i < p.gates.size(); ++i) p.gates.data()[i] = uniform(rng, -scale, scale);
        p.bias.segment(d_h, d_h).setOnes();
        return p;
    }

    template <class F>
    void for_each(F&& f) {
        f("proj", proj);
        f("gates", gates);
        f("bias", bias);
    }
    template <class F>
    void for_each(F&& f) const {
        f("proj", proj);
        f("gates", gates);
        f("bias", bias);
    }
};

struct CommState {
    Vector h;
    Vector c;

    static CommState zero(int d_h) { return {Vector::Zero(d_h), Vector::Zero(d_h)}; }
};

/// W_c applied to an already concatenated embedding vector.
inline Vector comm_project(const Vector& concat, const CommParams& params) {
    if (concat.size() != params.input_width())
        input_error("communicator input has width " + std::to_string(concat.size()) + ", expected " +
                    std::to_string(params.input_width()));
    return params.proj * concat;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Everything the backward pass needs from one cell step.
struct CellCache {
    Vector x, h_prev, c_prev;
    Vector i, f, o, g;
    Vector c, tanh_c;
};

inline CommState comm_step(const CommState& state, const Vector& input, const CommParams& params,
                           CellCache* cache = nullptr) {
    const int dh = params.d_h();
    if (input.size() != params.d_in())
        input_error("cell input has width " + std::to_string(input.size()) + ", expected " +
                    std::to_string(params.d_in()));
    if (!input.allFinite()) numeric_error("non-finite communicator input");

    Vector xh(input.size() + dh);
    xh << input, state.h;
    const Vector pre = params.gates * xh + params.bias;
    Vector i = pre.segment(0, dh).unaryExpr(&logistic);
    Vector f = pre.segment(dh, dh).unaryExpr(&logistic);
    Vector o = pre.segment(2 * dh, dh).unaryExpr(&logistic);
    Vector g = pre.segment(3 * dh, dh).array().tanh();
    Vector c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
    Vector tanh_c = c.array().tanh();
    CommState next{o.cwiseProduct(tanh_c), c};
    if (cache) *cache = {input, state.h, state.c, std::move(i), std::move(f), std::move(o), std::move(g), std::move(c), std::move(tanh_c)};
    return next;
}

struct CellGrad {
    Vector d_input;
    Vector dh_prev;
    Vector dc_prev;
};

/// Reverse step through one cell; accumulates weight gradients into `grads`.
inline CellGrad comm_step_backward(const CellCache& k, const Vector& dh, const Vector& dc_in, const CommParams& params,
                                   CommParams& grads) {
    const int dh_n = params.d_h();
    const Vector dc = dc_in + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
    Vector dpre(4 * dh_n);
    dpre.segment(0, dh_n) = dc.cwiseProduct(k.g).cwiseProduct(k.i.cwiseProduct((1.0 - k.i.array()).matrix()));
    dpre.segment(dh_n, dh_n) = dc.cwiseProduct(k.c_prev).cwiseProduct(k.f.cwiseProduct((1.0 - k.f.array()).matrix()));
    dpre.segment(2 * dh_n, dh_n) = dh.cwiseProduct(k.tanh_c).cwiseProduct(k.o.cwiseProduct((1.0 - k.o.array()).matrix()));
    dpre.segment(3 * dh_n, dh_n) = dc.cwiseProduct(k.i).cwiseProduct((1.0 - k.g.array().square()).matrix());

    Vector xh(k.x.size() + dh_n);
    xh << k.x, k.h_prev;
    grads.gates.noalias() += dpre * xh.transpose();
    grads.bias += dpre;
    const Vector dxh = params.gates.transpose() * dpre;
    return {dxh.head(k.x.size()), dxh.tail(dh_n), dc.cwiseProduct(k.f)};
}

}  // namespace copath
