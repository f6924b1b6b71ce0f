#include "mgml/ops.hpp"

#include <algorithm>
#include <cmath>

namespace mgml {

namespace {

// Inclusive output-column range for which iw = ow*stride - pad + kw stays
// inside [0, w).
std::pair<int, int> valid_cols(int w, int out_w, int stride, int pad, int kw) {
    int lo = 0;
    int off = pad - kw;
    if (off > 0) lo = (off + stride - 1) / stride;
    // floor division: the numerator goes negative on maps narrower than the
    // kernel reach, where truncation would round the wrong way
    const int num = w - 1 + off;
    const int floored = num >= 0 ? num / stride : -((-num + stride - 1) / stride);
    int hi = std::min(out_w - 1, floored);
    return {lo, hi};
}

} // namespace

// ---------------------------------------------------------------- crop

Tensor crop_spatial(const Tensor& t, const Anchor& a) {
    const Shape s = t.shape();
    if (a.x1 < 0 || a.y1 < 0 || a.x1 >= a.x2 || a.y1 >= a.y2 ||
        a.x2 > s.w || a.y2 > s.h) {
        throw BoundsError("crop anchor " + a.str() + " invalid for " +
                          std::to_string(s.h) + "x" + std::to_string(s.w) + " map");
    }
    Tensor out({s.n, s.c, a.height(), a.width()});
    auto src = t.data();
    auto dst = out.data();
    std::size_t di = 0;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = a.y1; y < a.y2; ++y) {
                std::size_t si = t.index(n, c, y, a.x1);
                for (int x = 0; x < a.width(); ++x) dst[di++] = src[si + x];
            }
    return out;
}

VarPtr crop_spatial(const VarPtr& t, const Anchor& a) {
    Tensor out = crop_spatial(t->value, a);
    return Variable::op(std::move(out), {t}, [t, a](Variable& self) {
        auto go = self.value.grad();
        auto gi = t->value.grad();
        const Shape s = t->value.shape();
        std::size_t oi = 0;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = a.y1; y < a.y2; ++y) {
                    std::size_t si = t->value.index(n, c, y, a.x1);
                    for (int x = 0; x < a.width(); ++x) gi[si + x] += go[oi++];
                }
    });
}

// --------------------------------------------------------------- slice

Tensor slice_channels(const Tensor& t, int lo, int hi) {
    const Shape s = t.shape();
    if (lo < 0 || lo >= hi || hi > s.c) {
        throw BoundsError("channel slice [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ") invalid for " +
                          std::to_string(s.c) + " channels");
    }
    Tensor out({s.n, hi - lo, s.h, s.w});
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    auto src = t.data();
    auto dst = out.data();
    for (int n = 0; n < s.n; ++n) {
        std::copy_n(src.data() + t.index(n, lo, 0, 0), (hi - lo) * plane,
                    dst.data() + out.index(n, 0, 0, 0));
    }
    return out;
}

VarPtr slice_channels(const VarPtr& t, int lo, int hi) {
    Tensor out = slice_channels(t->value, lo, hi);
    return Variable::op(std::move(out), {t}, [t, lo, hi](Variable& self) {
        const Shape s = t->value.shape();
        const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
        auto go = self.value.grad();
        auto gi = t->value.grad();
        for (int n = 0; n < s.n; ++n) {
            std::size_t si = t->value.index(n, lo, 0, 0);
            std::size_t oi = self.value.index(n, 0, 0, 0);
            for (std::size_t i = 0; i < (hi - lo) * plane; ++i) gi[si + i] += go[oi + i];
        }
    });
}

// -------------------------------------------------------------- concat

namespace {

Shape concat_out_shape(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw ShapeError("concat_channels: empty part list");
    Shape s0 = parts[0]->shape();
    int channels = 0;
    for (const Tensor* p : parts) {
        const Shape s = p->shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
            throw ShapeError("concat_channels: incompatible shapes " + s0.str() +
                             " and " + s.str());
        }
        channels += s.c;
    }
    return {s0.n, channels, s0.h, s0.w};
}

} // namespace

Tensor concat_channels(const std::vector<Tensor>& parts) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(parts.size());
    for (const Tensor& p : parts) ptrs.push_back(&p);
    Shape os = concat_out_shape(ptrs);
    Tensor out(os);
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    auto dst = out.data();
    for (int n = 0; n < os.n; ++n) {
        std::size_t di = out.index(n, 0, 0, 0);
        for (const Tensor& p : parts) {
            const std::size_t len = p.shape().c * plane;
            std::copy_n(p.data().data() + p.index(n, 0, 0, 0), len, dst.data() + di);
            di += len;
        }
    }
    return out;
}

VarPtr concat_channels(const std::vector<VarPtr>& parts) {
    std::vector<Tensor> values;
    values.reserve(parts.size());
    std::vector<const Tensor*> ptrs;
    for (const VarPtr& p : parts) ptrs.push_back(&p->value);
    Shape os = concat_out_shape(ptrs);
    Tensor out(os);
    const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
    auto dst = out.data();
    for (int n = 0; n < os.n; ++n) {
        std::size_t di = out.index(n, 0, 0, 0);
        for (const VarPtr& p : parts) {
            const Tensor& pv = p->value;
            const std::size_t len = pv.shape().c * plane;
            std::copy_n(pv.data().data() + pv.index(n, 0, 0, 0), len, dst.data() + di);
            di += len;
        }
    }
    return Variable::op(std::move(out), parts, [parts](Variable& self) {
        const Shape os = self.value.shape();
        const std::size_t plane = static_cast<std::size_t>(os.h) * os.w;
        auto go = self.value.grad();
        for (int n = 0; n < os.n; ++n) {
            std::size_t oi = self.value.index(n, 0, 0, 0);
            for (const VarPtr& p : parts) {
                const std::size_t len = p->value.shape().c * plane;
                if (p->requires_grad) {
                    auto gi = p->value.grad();
                    std::size_t si = p->value.index(n, 0, 0, 0);
                    for (std::size_t i = 0; i < len; ++i) gi[si + i] += go[oi + i];
                }
                oi += len;
            }
        }
    });
}

// ------------------------------------------------------------- pooling

Tensor adaptive_avg_pool(const Tensor& t, int out_h, int out_w) {
    const Shape s = t.shape();
    if (out_h < 1 || out_w < 1 || out_h > s.h || out_w > s.w) {
        throw ShapeError("adaptive_avg_pool: output " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " invalid for input " +
                         std::to_string(s.h) + "x" + std::to_string(s.w));
    }
    Tensor out({s.n, s.c, out_h, out_w});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int i = 0; i < out_h; ++i) {
                const int y0 = (i * s.h) / out_h;
                const int y1 = ((i + 1) * s.h + out_h - 1) / out_h;
                for (int j = 0; j < out_w; ++j) {
                    const int x0 = (j * s.w) / out_w;
                    const int x1 = ((j + 1) * s.w + out_w - 1) / out_w;
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x) acc += t.at(n, c, y, x);
                    out.at(n, c, i, j) = acc / ((y1 - y0) * (x1 - x0));
                }
            }
    return out;
}

VarPtr adaptive_avg_pool(const VarPtr& t, int out_h, int out_w) {
    Tensor out = adaptive_avg_pool(t->value, out_h, out_w);
    return Variable::op(std::move(out), {t}, [t, out_h, out_w](Variable& self) {
        const Shape s = t->value.shape();
        auto go = self.value.grad();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int i = 0; i < out_h; ++i) {
                    const int y0 = (i * s.h) / out_h;
                    const int y1 = ((i + 1) * s.h + out_h - 1) / out_h;
                    for (int j = 0; j < out_w; ++j) {
                        const int x0 = (j * s.w) / out_w;
                        const int x1 = ((j + 1) * s.w + out_w - 1) / out_w;
                        const double g =
                            go[self.value.index(n, c, i, j)] / ((y1 - y0) * (x1 - x0));
                        auto gi = t->value.grad();
                        for (int y = y0; y < y1; ++y)
                            for (int x = x0; x < x1; ++x)
                                gi[t->value.index(n, c, y, x)] += g;
                    }
                }
    });
}

Tensor global_avg_pool(const Tensor& t) {
    const Shape s = t.shape();
    Tensor out({s.n, s.c, 1, 1});
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    auto src = t.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const std::size_t base = t.index(n, c, 0, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += src[base + i];
            out.at(n, c, 0, 0) = acc / static_cast<double>(plane);
        }
    return out;
}

VarPtr global_avg_pool(const VarPtr& t) {
    Tensor out = global_avg_pool(t->value);
    return Variable::op(std::move(out), {t}, [t](Variable& self) {
        const Shape s = t->value.shape();
        const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
        auto go = self.value.grad();
        auto gi = t->value.grad();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double g =
                    go[self.value.index(n, c, 0, 0)] / static_cast<double>(plane);
                const std::size_t base = t->value.index(n, c, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) gi[base + i] += g;
            }
    });
}

// ------------------------------------------------------- add and relu

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    }
    Tensor out(a.shape());
    auto pa = a.data(), pb = b.data();
    auto po = out.data();
    for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];
    return out;
}

VarPtr add(const VarPtr& a, const VarPtr& b) {
    Tensor out = add(a->value, b->value);
    return Variable::op(std::move(out), {a, b}, [a, b](Variable& self) {
        auto go = self.value.grad();
        if (a->requires_grad) {
            auto ga = a->value.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (b->requires_grad) {
            auto gb = b->value.grad();
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
        }
    });
}

Tensor relu(const Tensor& t) {
    Tensor out(t.shape());
    auto src = t.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    return out;
}

VarPtr relu(const VarPtr& t) {
    Tensor out = relu(t->value);
    return Variable::op(std::move(out), {t}, [t](Variable& self) {
        auto go = self.value.grad();
        auto gi = t->value.grad();
        auto x = t->value.data();
        for (std::size_t i = 0; i < go.size(); ++i)
            if (x[i] > 0.0) gi[i] += go[i];
    });
}

// --------------------------------------------------------- convolution

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride) {
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    if (ws.h != ws.w || ws.h % 2 == 0) {
        throw ShapeError("conv2d: kernel must be square and odd, got " + ws.str());
    }
    if (xs.c != ws.c) {
        throw ShapeError("conv2d: input channels " + std::to_string(xs.c) +
                         " do not match kernel " + ws.str());
    }
    if (stride != 1 && stride != 2) {
        throw ConfigError("conv2d: stride must be 1 or 2");
    }
    const int k = ws.h, pad = (k - 1) / 2;
    const int oh = (xs.h + stride - 1) / stride;
    const int ow = (xs.w + stride - 1) / stride;
    Tensor out({xs.n, ws.n, oh, ow});
    auto xd = x.data();
    auto wd = weight.data();
    auto od = out.data();
    for (int n = 0; n < xs.n; ++n)
        for (int oc = 0; oc < ws.n; ++oc) {
            double* orow0 = od.data() + out.index(n, oc, 0, 0);
            const double bv = bias.data()[oc];
            for (int i = 0; i < oh * ow; ++i) orow0[i] = bv;
            for (int ic = 0; ic < xs.c; ++ic) {
                const double* xplane = xd.data() + x.index(n, ic, 0, 0);
                const double* wk = wd.data() + weight.index(oc, ic, 0, 0);
                for (int kh = 0; kh < k; ++kh)
                    for (int kw = 0; kw < k; ++kw) {
                        const double wv = wk[kh * k + kw];
                        if (wv == 0.0) continue;
                        auto [clo, chi] = valid_cols(xs.w, ow, stride, pad, kw);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + kh;
                            if (iy < 0 || iy >= xs.h) continue;
                            const double* xrow = xplane + static_cast<std::size_t>(iy) * xs.w;
                            double* orow = orow0 + static_cast<std::size_t>(oy) * ow;
                            for (int ox = clo; ox <= chi; ++ox) {
                                orow[ox] += wv * xrow[ox * stride - pad + kw];
                            }
                        }
                    }
            }
        }
    return out;
}

VarPtr conv2d(const VarPtr& x, const VarPtr& weight, const VarPtr& bias, int stride) {
    Tensor out = conv2d(x->value, weight->value, bias->value, stride);
    return Variable::op(std::move(out), {x, weight, bias},
                        [x, weight, bias, stride](Variable& self) {
        const Shape xs = x->value.shape();
        const Shape ws = weight->value.shape();
        const Shape os = self.value.shape();
        const int k = ws.h, pad = (k - 1) / 2;
        auto go = self.value.grad();
        auto xd = x->value.data();
        auto wd = weight->value.data();
        const bool need_x = x->requires_grad;
        const bool need_w = weight->requires_grad;
        if (bias->requires_grad) {
            auto gb = bias->value.grad();
            for (int n = 0; n < xs.n; ++n)
                for (int oc = 0; oc < ws.n; ++oc) {
                    const double* grow = go.data() + self.value.index(n, oc, 0, 0);
                    double acc = 0.0;
                    for (int i = 0; i < os.h * os.w; ++i) acc += grow[i];
                    gb[oc] += acc;
                }
        }
        if (!need_x && !need_w) return;
        auto gx = need_x ? x->value.grad() : std::span<double>{};
        auto gw = need_w ? weight->value.grad() : std::span<double>{};
        for (int n = 0; n < xs.n; ++n)
            for (int oc = 0; oc < ws.n; ++oc) {
                const double* gplane = go.data() + self.value.index(n, oc, 0, 0);
                for (int ic = 0; ic < xs.c; ++ic) {
                    const double* xplane = xd.data() + x->value.index(n, ic, 0, 0);
                    double* gxplane =
                        need_x ? gx.data() + x->value.index(n, ic, 0, 0) : nullptr;
                    const double* wk = wd.data() + weight->value.index(oc, ic, 0, 0);
                    double* gwk =
                        need_w ? gw.data() + weight->value.index(oc, ic, 0, 0) : nullptr;
                    for (int kh = 0; kh < k; ++kh)
                        for (int kw = 0; kw < k; ++kw) {
                            const double wv = wk[kh * k + kw];
                            double wacc = 0.0;
                            auto [clo, chi] = valid_cols(xs.w, os.w, stride, pad, kw);
                            for (int oy = 0; oy < os.h; ++oy) {
                                const int iy = oy * stride - pad + kh;
                                if (iy < 0 || iy >= xs.h) continue;
                                const double* xrow =
                                    xplane + static_cast<std::size_t>(iy) * xs.w;
                                const double* grow =
                                    gplane + static_cast<std::size_t>(oy) * os.w;
                                if (need_x) {
                                    double* gxrow =
                                        gxplane + static_cast<std::size_t>(iy) * xs.w;
                                    for (int ox = clo; ox <= chi; ++ox) {
                                        const int ix = ox * stride - pad + kw;
                                        gxrow[ix] += wv * grow[ox];
                                        wacc += xrow[ix] * grow[ox];
                                    }
                                } else {
                                    for (int ox = clo; ox <= chi; ++ox) {
                                        wacc += xrow[ox * stride - pad + kw] * grow[ox];
                                    }
                                }
                            }
                            if (need_w) gwk[kh * k + kw] += wacc;
                        }
                }
            }
    });
}

// -------------------------------------------------------------- linear

Tensor linear(const Tensor& v, const Tensor& weight, const Tensor& bias) {
    const Shape vs = v.shape();
    const Shape ws = weight.shape();
    const int in_features = vs.c * vs.h * vs.w;
    if (in_features != ws.c) {
        throw ShapeError("linear: input features " + std::to_string(in_features) +
                         " do not match weight " + ws.str());
    }
    Tensor out({vs.n, ws.n, 1, 1});
    auto vd = v.data();
    auto wd = weight.data();
    auto bd = bias.data();
    auto od = out.data();
    for (int n = 0; n < vs.n; ++n) {
        const double* vrow = vd.data() + static_cast<std::size_t>(n) * in_features;
        for (int o = 0; o < ws.n; ++o) {
            const double* wrow = wd.data() + static_cast<std::size_t>(o) * in_features;
            double acc = bd[o];
            for (int i = 0; i < in_features; ++i) acc += wrow[i] * vrow[i];
            od[static_cast<std::size_t>(n) * ws.n + o] = acc;
        }
    }
    return out;
}

VarPtr linear(const VarPtr& v, const VarPtr& weight, const VarPtr& bias) {
    Tensor out = linear(v->value, weight->value, bias->value);
    return Variable::op(std::move(out), {v, weight, bias},
                        [v, weight, bias](Variable& self) {
        const Shape vs = v->value.shape();
        const int in_features = vs.c * vs.h * vs.w;
        const int out_features = weight->value.shape().n;
        auto go = self.value.grad();
        auto vd = v->value.data();
        auto wd = weight->value.data();
        for (int n = 0; n < vs.n; ++n) {
            const double* grow = go.data() + static_cast<std::size_t>(n) * out_features;
            const double* vrow = vd.data() + static_cast<std::size_t>(n) * in_features;
            if (bias->requires_grad) {
                auto gb = bias->value.grad();
                for (int o = 0; o < out_features; ++o) gb[o] += grow[o];
            }
            for (int o = 0; o < out_features; ++o) {
                const double g = grow[o];
                if (g == 0.0) continue;
                const double* wrow =
                    wd.data() + static_cast<std::size_t>(o) * in_features;
                if (v->requires_grad) {
                    auto gv = v->value.grad();
                    double* gvrow = gv.data() + static_cast<std::size_t>(n) * in_features;
                    for (int i = 0; i < in_features; ++i) gvrow[i] += g * wrow[i];
                }
                if (weight->requires_grad) {
                    auto gw = weight->value.grad();
                    double* gwrow = gw.data() + static_cast<std::size_t>(o) * in_features;
                    for (int i = 0; i < in_features; ++i) gwrow[i] += g * vrow[i];
                }
            }
        }
    });
}

// ------------------------------------------------------ scalar helpers

VarPtr scale(const VarPtr& t, double factor) {
    Tensor out(t->value.shape());
    auto src = t->value.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = factor * src[i];
    return Variable::op(std::move(out), {t}, [t, factor](Variable& self) {
        auto go = self.value.grad();
        auto gi = t->value.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gi[i] += factor * go[i];
    });
}

VarPtr add_scalars(const std::vector<VarPtr>& terms) {
    if (terms.empty()) throw UsageError("add_scalars: empty term list");
    double acc = 0.0;
    for (const VarPtr& t : terms) {
        if (t->value.shape() != Shape{1, 1, 1, 1}) {
            throw ShapeError("add_scalars: non-scalar term of shape " +
                             t->value.shape().str());
        }
        acc += t->value.data()[0];
    }
    return Variable::op(Tensor({1, 1, 1, 1}, acc), terms, [terms](Variable& self) {
        const double g = self.value.grad()[0];
        for (const VarPtr& t : terms)
            if (t->requires_grad) t->value.grad()[0] += g;
    });
}

VarPtr sum(const VarPtr& t) {
    double acc = 0.0;
    for (double v : t->value.data()) acc += v;
    return Variable::op(Tensor({1, 1, 1, 1}, acc), {t}, [t](Variable& self) {
        const double g = self.value.grad()[0];
        auto gi = t->value.grad();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g;
    });
}

// ------------------------------------------------------------- softmax

Tensor softmax(const Tensor& logits) {
    const Shape s = logits.shape();
    if (s.h != 1 || s.w != 1) {
        throw ShapeError("softmax: expected (n, k, 1, 1) logits, got " + s.str());
    }
    Tensor out(s);
    auto src = logits.data();
    auto dst = out.data();
    for (int n = 0; n < s.n; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * s.c;
        double mx = src[base];
        for (int j = 1; j < s.c; ++j) mx = std::max(mx, src[base + j]);
        double denom = 0.0;
        for (int j = 0; j < s.c; ++j) {
            dst[base + j] = std::exp(src[base + j] - mx);
            denom += dst[base + j];
        }
        for (int j = 0; j < s.c; ++j) dst[base + j] /= denom;
    }
    return out;
}

CrossEntropyResult softmax_cross_entropy(const VarPtr& logits,
                                         std::span<const int> labels) {
    const Shape s = logits->value.shape();
    if (s.h != 1 || s.w != 1) {
        throw ShapeError("softmax_cross_entropy: expected (n, k, 1, 1) logits, got " +
                         s.str());
    }
    if (static_cast<int>(labels.size()) != s.n) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(s.n));
    }
    for (int l : labels) {
        if (l < 0 || l >= s.c) {
            throw BoundsError("label " + std::to_string(l) + " out of range for " +
                              std::to_string(s.c) + " classes");
        }
    }
    Tensor probs = softmax(logits->value);
    auto src = logits->value.data();
    double loss = 0.0;
    for (int n = 0; n < s.n; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * s.c;
        double mx = src[base];
        for (int j = 1; j < s.c; ++j) mx = std::max(mx, src[base + j]);
        double lse = 0.0;
        for (int j = 0; j < s.c; ++j) lse += std::exp(src[base + j] - mx);
        loss += mx + std::log(lse) - src[base + labels[n]];
    }
    loss /= s.n;

    std::vector<int> label_copy(labels.begin(), labels.end());
    Tensor probs_copy = probs;
    VarPtr loss_var = Variable::op(
        Tensor({1, 1, 1, 1}, loss), {logits},
        [logits, probs_copy, label_copy](Variable& self) {
            const Shape s = logits->value.shape();
            const double g = self.value.grad()[0] / s.n;
            auto gl = logits->value.grad();
            auto p = probs_copy.data();
            for (int n = 0; n < s.n; ++n) {
                const std::size_t base = static_cast<std::size_t>(n) * s.c;
                for (int j = 0; j < s.c; ++j) gl[base + j] += g * p[base + j];
                gl[base + label_copy[n]] -= g;
            }
        });
    return {std::move(loss_var), std::move(probs)};
}

} // namespace mgml
