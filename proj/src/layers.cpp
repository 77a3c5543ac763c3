#include "tspfcn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace tspfcn::layers {

namespace {

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::clamp(threads, 1, std::max(1, count));
    if (threads == 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(count, lo + chunk);
        if (lo < hi) {
            pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
        }
    }
    for (auto& th : pool) {
        th.join();
    }
}

struct ConvGeom {
    int cin, cout, h, w, k, pad;
};

template <typename T>
ConvGeom conv_geom(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (in.rank() != 3 || weight.rank() != 4 || bias.rank() != 1) {
        throw ShapeError("conv2d: expected CHW input, OIHW weight and 1-d bias");
    }
    const int k = weight.dim(2);
    if (weight.dim(1) != in.dim(0) || weight.dim(3) != k || k % 2 == 0 ||
        bias.dim(0) != weight.dim(0)) {
        throw ShapeError("conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                         shape_str(in.shape()));
    }
    return {in.dim(0), weight.dim(0), in.dim(1), in.dim(2), k, (k - 1) / 2};
}

// Visits every (output row segment, input row segment) pair that a kernel tap (ky, kx) touches.
template <typename Fn>
void for_each_tap_row(const ConvGeom& g, int ky, int kx, Fn&& fn) {
    const int dy = ky - g.pad;
    const int dx = kx - g.pad;
    const int y0 = std::max(0, -dy);
    const int y1 = std::min(g.h, g.h - dy);
    const int x0 = std::max(0, -dx);
    const int x1 = std::min(g.w, g.w - dx);
    if (x0 >= x1) {
        return;
    }
    for (int y = y0; y < y1; ++y) {
        fn(static_cast<std::size_t>(y) * g.w + x0, static_cast<std::size_t>(y + dy) * g.w + x0 + dx,
           x1 - x0);
    }
}

} // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Compute& compute) {
    const ConvGeom g = conv_geom(in, weight, bias);
    Tensor<T> out({g.cout, g.h, g.w});
    const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
    const T* src = in.data();
    const T* wt = weight.data();
    T* dst = out.data();
    parallel_for(g.cout, compute.threads, [&](int lo, int hi) {
        for (int co = lo; co < hi; ++co) {
            T* o = dst + co * plane;
            std::fill(o, o + plane, bias[static_cast<std::size_t>(co)]);
            for (int ci = 0; ci < g.cin; ++ci) {
                const T* i = src + ci * plane;
                const T* wk = wt + (static_cast<std::size_t>(co) * g.cin + ci) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    for (int kx = 0; kx < g.k; ++kx) {
                        const T w = wk[ky * g.k + kx];
                        for_each_tap_row(g, ky, kx, [&](std::size_t oo, std::size_t io, int len) {
                            T* op = o + oo;
                            const T* ip = i + io;
                            for (int x = 0; x < len; ++x) {
                                op[x] += w * ip[x];
                            }
                        });
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, const Compute& compute) {
    const ConvGeom g = conv_geom(in, weight, grad_bias);
    require_shape(grad_out, {g.cout, g.h, g.w}, "conv2d_backward grad_out");
    const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
    const T* src = in.data();
    const T* gout = grad_out.data();

    parallel_for(g.cout, compute.threads, [&](int lo, int hi) {
        for (int co = lo; co < hi; ++co) {
            const T* go = gout + co * plane;
            T acc{0};
            for (std::size_t p = 0; p < plane; ++p) {
                acc += go[p];
            }
            grad_bias[static_cast<std::size_t>(co)] += acc;
            for (int ci = 0; ci < g.cin; ++ci) {
                const T* i = src + ci * plane;
                T* gw = grad_weight.data() + (static_cast<std::size_t>(co) * g.cin + ci) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    for (int kx = 0; kx < g.k; ++kx) {
                        T s{0};
                        for_each_tap_row(g, ky, kx, [&](std::size_t oo, std::size_t io, int len) {
                            const T* op = go + oo;
                            const T* ip = i + io;
                            for (int x = 0; x < len; ++x) {
                                s += op[x] * ip[x];
                            }
                        });
                        gw[ky * g.k + kx] += s;
                    }
                }
            }
        }
    });

    Tensor<T> grad_in(in.shape());
    parallel_for(g.cin, compute.threads, [&](int lo, int hi) {
        for (int ci = lo; ci < hi; ++ci) {
            T* gi = grad_in.data() + ci * plane;
            for (int co = 0; co < g.cout; ++co) {
                const T* go = gout + co * plane;
                const T* wk = weight.data() + (static_cast<std::size_t>(co) * g.cin + ci) * g.k * g.k;
                for (int ky = 0; ky < g.k; ++ky) {
                    for (int kx = 0; kx < g.k; ++kx) {
                        const T w = wk[ky * g.k + kx];
                        for_each_tap_row(g, ky, kx, [&](std::size_t oo, std::size_t io, int len) {
                            const T* op = go + oo;
                            T* ip = gi + io;
                            for (int x = 0; x < len; ++x) {
                                ip[x] += w * op[x];
                            }
                        });
                    }
                }
            }
        }
    });
    return grad_in;
}

namespace {

struct UpGeom {
    int cin, cout, h, w, k, stride, pad, oh, ow;
};

template <typename T>
UpGeom up_geom(const Tensor<T>& in, const Tensor<T>& weight, int stride) {
    if (in.rank() != 3 || weight.rank() != 4 || weight.dim(0) != in.dim(0) ||
        weight.dim(2) != 2 * stride || weight.dim(3) != 2 * stride || stride < 2 || stride % 2) {
        throw ShapeError("conv_transpose2d: weight " + shape_str(weight.shape()) +
                         " incompatible with input " + shape_str(in.shape()) + " at stride " +
                         std::to_string(stride));
    }
    return {in.dim(0), weight.dim(1), in.dim(1), in.dim(2), 2 * stride, stride, stride / 2,
            in.dim(1) * stride, in.dim(2) * stride};
}

} // namespace

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride) {
    const UpGeom g = up_geom(in, weight, stride);
    Tensor<T> out({g.cout, g.oh, g.ow});
    for (int co = 0; co < g.cout; ++co) {
        for (int p = 0; p < g.oh * g.ow; ++p) {
            out[static_cast<std::size_t>(co) * g.oh * g.ow + p] = bias[static_cast<std::size_t>(co)];
        }
    }
    for (int ci = 0; ci < g.cin; ++ci) {
        for (int iy = 0; iy < g.h; ++iy) {
            for (int ix = 0; ix < g.w; ++ix) {
                const T v = in.at(ci, iy, ix);
                for (int co = 0; co < g.cout; ++co) {
                    const T* wk = weight.data() + (static_cast<std::size_t>(ci) * g.cout + co) * g.k * g.k;
                    for (int ky = 0; ky < g.k; ++ky) {
                        const int oy = iy * g.stride - g.pad + ky;
                        if (oy < 0 || oy >= g.oh) {
                            continue;
                        }
                        const int kx0 = std::max(0, g.pad - ix * g.stride);
                        const int kx1 = std::min(g.k, g.ow + g.pad - ix * g.stride);
                        const int off = ix * g.stride - g.pad;
                        T* orow = &out.at(co, oy, 0);
                        const T* wrow = wk + ky * g.k;
                        for (int kx = kx0; kx < kx1; ++kx) {
                            orow[off + kx] += v * wrow[kx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> conv_transpose2d_backward(const Tensor<T>& in, const Tensor<T>& weight,
                                    const Tensor<T>& grad_out, int stride, Tensor<T>& grad_weight,
                                    Tensor<T>& grad_bias) {
    const UpGeom g = up_geom(in, weight, stride);
    require_shape(grad_out, {g.cout, g.oh, g.ow}, "conv_transpose2d_backward grad_out");
    for (int co = 0; co < g.cout; ++co) {
        T acc{0};
        for (int p = 0; p < g.oh * g.ow; ++p) {
            acc += grad_out[static_cast<std::size_t>(co) * g.oh * g.ow + p];
        }
        grad_bias[static_cast<std::size_t>(co)] += acc;
    }
    Tensor<T> grad_in(in.shape());
    for (int ci = 0; ci < g.cin; ++ci) {
        for (int iy = 0; iy < g.h; ++iy) {
            for (int ix = 0; ix < g.w; ++ix) {
                const T v = in.at(ci, iy, ix);
                T gi{0};
                for (int co = 0; co < g.cout; ++co) {
                    const std::size_t woff = (static_cast<std::size_t>(ci) * g.cout + co) * g.k * g.k;
                    const T* wk = weight.data() + woff;
                    T* gwk = grad_weight.data() + woff;
                    for (int ky = 0; ky < g.k; ++ky) {
                        const int oy = iy * g.stride - g.pad + ky;
                        if (oy < 0 || oy >= g.oh) {
                            continue;
                        }
                        const int kx0 = std::max(0, g.pad - ix * g.stride);
                        const int kx1 = std::min(g.k, g.ow + g.pad - ix * g.stride);
                        const int off = ix * g.stride - g.pad;
                        const T* grow = &grad_out.at(co, oy, 0);
                        for (int kx = kx0; kx < kx1; ++kx) {
                            gi += wk[ky * g.k + kx] * grow[off + kx];
                            gwk[ky * g.k + kx] += v * grow[off + kx];
                        }
                    }
                }
                grad_in.at(ci, iy, ix) = gi;
            }
        }
    }
    return grad_in;
}

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& in, std::vector<std::uint32_t>& argmax) {
    if (in.rank() != 3 || in.dim(1) % 2 || in.dim(2) % 2) {
        throw ShapeError("maxpool2: needs CHW input with even spatial dims, got " +
                         shape_str(in.shape()));
    }
    const int c = in.dim(0);
    const int h = in.dim(1) / 2;
    const int w = in.dim(2) / 2;
    Tensor<T> out({c, h, w});
    argmax.assign(out.size(), 0);
    std::size_t o = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x, ++o) {
                std::size_t best = (static_cast<std::size_t>(ch) * in.dim(1) + 2 * y) * in.dim(2) + 2 * x;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t idx =
                            (static_cast<std::size_t>(ch) * in.dim(1) + 2 * y + dy) * in.dim(2) + 2 * x + dx;
                        if (in[idx] > in[best]) {
                            best = idx;
                        }
                    }
                }
                out[o] = in[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> maxpool2_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out) {
    Tensor<T> grad_in(in_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) {
        grad_in[argmax[o]] += grad_out[o];
    }
    return grad_in;
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
    for (T& v : t.values()) {
        v = v > T{0} ? v : T{0};
    }
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(out[i] > T{0})) {
            grad[i] = T{0};
        }
    }
}

template <typename T>
void dropout_inplace(Tensor<T>& t, double rate, std::mt19937_64& rng, std::vector<T>& mask) {
    mask.assign(t.size(), T{1});
    if (rate <= 0.0) {
        return;
    }
    std::bernoulli_distribution keep(1.0 - rate);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < t.size(); ++i) {
        mask[i] = keep(rng) ? scale : T{0};
        t[i] *= mask[i];
    }
}

template <typename T>
void sigmoid_inplace(Tensor<T>& t) {
    for (T& v : t.values()) {
        v = v >= T{0} ? T{1} / (T{1} + std::exp(-v)) : std::exp(v) / (T{1} + std::exp(v));
    }
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
    int channels = 0;
    const int h = parts.front()->dim(1);
    const int w = parts.front()->dim(2);
    for (const auto* p : parts) {
        if (p->rank() != 3 || p->dim(1) != h || p->dim(2) != w) {
            throw ShapeError("concat_channels: spatial size mismatch");
        }
        channels += p->dim(0);
    }
    Tensor<T> out({channels, h, w});
    auto dst = out.values().begin();
    for (const auto* p : parts) {
        dst = std::copy(p->values().begin(), p->values().end(), dst);
    }
    return out;
}

#define TSPFCN_INSTANTIATE(T)                                                                      \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Compute&); \
    template Tensor<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                       Tensor<T>&, Tensor<T>&, const Compute&);                    \
    template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int); \
    template Tensor<T> conv_transpose2d_backward(const Tensor<T>&, const Tensor<T>&,               \
                                                 const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);   \
    template Tensor<T> maxpool2(const Tensor<T>&, std::vector<std::uint32_t>&);                    \
    template Tensor<T> maxpool2_backward(const Shape&, const std::vector<std::uint32_t>&,          \
                                         const Tensor<T>&);                                        \
    template void relu_inplace(Tensor<T>&);                                                        \
    template void relu_backward_inplace(const Tensor<T>&, Tensor<T>&);                             \
    template void dropout_inplace(Tensor<T>&, double, std::mt19937_64&, std::vector<T>&);          \
    template void sigmoid_inplace(Tensor<T>&);                                                     \
    template Tensor<T> concat_channels(const std::vector<const Tensor<T>*>&);

TSPFCN_INSTANTIATE(float)
TSPFCN_INSTANTIATE(double)

#undef TSPFCN_INSTANTIATE

} // namespace tspfcn::layers
