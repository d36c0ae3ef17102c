#include "rescnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rescnn/errors.hpp"

namespace rescnn {

const Tensor& Var::value() const { return graph_->value(index_); }

Var Graph::leaf(Tensor& t) {
  if (auto it = leaf_index_.find(&t); it != leaf_index_.end()) return Var(this, it->second);
  const std::size_t index = nodes_.size();
  nodes_.push_back(Node{"leaf", &t, {}, {}});
  leaf_index_.emplace(&t, index);
  return Var(this, index);
}

Var Graph::constant(Tensor t) {
  t.set_requires_grad(false);
  Tensor& stored = owned_.emplace_back(std::move(t));
  nodes_.push_back(Node{"constant", &stored, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(std::string op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (check_finite_) value.check_finite(op);
  bool needs_grad = false;
  std::vector<std::size_t> input_ids;
  input_ids.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.graph_ != this) throw std::logic_error(op + ": operand belongs to another graph");
    input_ids.push_back(v.index_);
    needs_grad = needs_grad || nodes_[v.index_].tensor->requires_grad();
  }
  value.set_requires_grad(needs_grad);
  Tensor& stored = owned_.emplace_back(std::move(value));
  nodes_.push_back(Node{std::move(op), &stored, std::move(input_ids),
                        needs_grad ? std::move(backward) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw std::logic_error("backward: loss belongs to another graph");
  Tensor& out = *nodes_.at(loss.index_).tensor;
  if (out.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(out.shape()));
  }
  for (auto& [tensor, index] : leaf_index_) {
    Tensor* t = nodes_[index].tensor;
    if (t->requires_grad()) t->grad_buffer();
  }
  for (Tensor& t : owned_) t.clear_grad();
  if (!out.requires_grad()) return;
  out.grad_buffer()[0] += 1.0;
  for (std::size_t i = loss.index_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || !node.tensor->has_grad()) continue;
    node.backward(node.tensor->grad());
  }
}

// ---- Operations ------------------------------------------------------------

namespace {

// Gradient slot of an input, or an empty span when it does not need one.
std::span<double> grad_of(Tensor* t) {
  if (!t->requires_grad()) return {};
  return t->grad_buffer();
}

Tensor& mut(Var v) { return *v.graph().nodes()[v.index()].tensor; }

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got shape " + shape_string(t.shape()));
  }
}

}  // namespace

Var conv1d(Var input, Var kernel, Var bias, Padding padding) {
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  const Tensor& b = bias.value();
  require_rank(x, 2, "conv1d", "input");
  require_rank(k, 3, "conv1d", "kernel");
  require_rank(b, 1, "conv1d", "bias");
  const std::size_t len = x.dim(0), in_ch = x.dim(1);
  const std::size_t width = k.dim(0), out_ch = k.dim(2);
  if (k.dim(1) != in_ch) {
    throw ShapeError("conv1d: input " + shape_string(x.shape()) + " incompatible with kernel " +
                     shape_string(k.shape()));
  }
  if (b.dim(0) != out_ch) {
    throw ShapeError("conv1d: bias " + shape_string(b.shape()) + " incompatible with kernel " +
                     shape_string(k.shape()));
  }
  if (width == 0) throw ShapeError("conv1d: kernel width must be positive");

  std::size_t out_len = 0;
  std::ptrdiff_t pad_left = 0;
  if (padding == Padding::Valid) {
    if (width > len) {
      throw ShapeError("conv1d: kernel width " + std::to_string(width) +
                       " exceeds sequence length " + std::to_string(len) + " in valid mode");
    }
    out_len = len - width + 1;
  } else {
    out_len = len;
    pad_left = static_cast<std::ptrdiff_t>((width - 1) / 2);
  }

  Tensor y(Shape{out_len, out_ch});
  const double* xd = x.data().data();
  const double* kd = k.data().data();
  const double* bd = b.data().data();
  double* yd = y.data().data();
  const auto slen = static_cast<std::ptrdiff_t>(len);
  for (std::size_t t = 0; t < out_len; ++t) {
    double* yrow = yd + t * out_ch;
    std::copy(bd, bd + out_ch, yrow);
    for (std::size_t j = 0; j < width; ++j) {
      const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t + j) - pad_left;
      if (r < 0 || r >= slen) continue;
      const double* xrow = xd + static_cast<std::size_t>(r) * in_ch;
      const double* ktap = kd + j * in_ch * out_ch;
      for (std::size_t c = 0; c < in_ch; ++c) {
        const double xv = xrow[c];
        const double* kr = ktap + c * out_ch;
        for (std::size_t o = 0; o < out_ch; ++o) yrow[o] += xv * kr[o];
      }
    }
  }

  Tensor* xp = &mut(input);
  Tensor* kp = &mut(kernel);
  Tensor* bp = &mut(bias);
  const Var inputs[] = {input, kernel, bias};
  return input.graph().record(
      "conv1d", std::move(y), inputs,
      [=](std::span<const double> g) {
        std::span<double> gx = grad_of(xp);
        std::span<double> gk = grad_of(kp);
        std::span<double> gb = grad_of(bp);
        const double* xv = xp->data().data();
        const double* kv = kp->data().data();
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* grow = g.data() + t * out_ch;
          if (!gb.empty()) {
            for (std::size_t o = 0; o < out_ch; ++o) gb[o] += grow[o];
          }
          for (std::size_t j = 0; j < width; ++j) {
            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(t + j) - pad_left;
            if (r < 0 || r >= slen) continue;
            const std::size_t row = static_cast<std::size_t>(r) * in_ch;
            const std::size_t tap = j * in_ch * out_ch;
            for (std::size_t c = 0; c < in_ch; ++c) {
              const double* kr = kv + tap + c * out_ch;
              if (!gk.empty()) {
                const double xc = xv[row + c];
                double* gkr = gk.data() + tap + c * out_ch;
                for (std::size_t o = 0; o < out_ch; ++o) gkr[o] += xc * grow[o];
              }
              if (!gx.empty()) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out_ch; ++o) acc += kr[o] * grow[o];
                gx[row + c] += acc;
              }
            }
          }
        }
      });
}

Var relu(Var x) {
  const Tensor& in = x.value();
  Tensor y(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] > 0.0 ? in[i] : 0.0;
  Tensor* xp = &mut(x);
  const Var inputs[] = {x};
  return x.graph().record("relu", std::move(y), inputs, [xp](std::span<const double> g) {
    std::span<double> gx = grad_of(xp);
    if (gx.empty()) return;
    const auto xv = xp->data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av.shape(), bv.shape(), "add");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) y[i] = av[i] + bv[i];
  Tensor* ap = &mut(a);
  Tensor* bp = &mut(b);
  const Var inputs[] = {a, b};
  return a.graph().record("add", std::move(y), inputs, [ap, bp](std::span<const double> g) {
    // a and b may alias (x + x); take both slots before writing.
    std::span<double> ga = grad_of(ap);
    std::span<double> gb = grad_of(bp);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!ga.empty()) ga[i] += g[i];
      if (!gb.empty()) gb[i] += g[i];
    }
  });
}

Var max_over_time(Var input) {
  const Tensor& x = input.value();
  require_rank(x, 2, "max_over_time", "input");
  const std::size_t len = x.dim(0), ch = x.dim(1);
  if (len == 0) throw ShapeError("max_over_time: empty sequence");
  Tensor y(Shape{ch});
  std::vector<std::size_t> argmax(ch, 0);
  for (std::size_t c = 0; c < ch; ++c) y[c] = x.at(0, c);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      if (x.at(t, c) > y[c]) {
        y[c] = x.at(t, c);
        argmax[c] = t;
      }
    }
  }
  Tensor* xp = &mut(input);
  const Var inputs[] = {input};
  return input.graph().record("max_over_time", std::move(y), inputs,
                              [xp, ch, argmax = std::move(argmax)](std::span<const double> g) {
                                std::span<double> gx = grad_of(xp);
                                if (gx.empty()) return;
                                for (std::size_t c = 0; c < ch; ++c) gx[argmax[c] * ch + c] += g[c];
                              });
}

Var affine(Var x, Var weight, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  require_rank(xv, 1, "affine", "input");
  require_rank(w, 2, "affine", "weight");
  require_rank(b, 1, "affine", "bias");
  const std::size_t in = w.dim(0), out = w.dim(1);
  if (xv.dim(0) != in || b.dim(0) != out) {
    throw ShapeError("affine: input " + shape_string(xv.shape()) + ", weight " +
                     shape_string(w.shape()) + ", bias " + shape_string(b.shape()) +
                     " do not agree");
  }
  Tensor y(Shape{out}, std::vector<double>(b.values()));
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = xv[i];
    const double* wr = w.data().data() + i * out;
    for (std::size_t o = 0; o < out; ++o) y[o] += xi * wr[o];
  }
  Tensor* xp = &mut(x);
  Tensor* wp = &mut(weight);
  Tensor* bp = &mut(bias);
  const Var inputs[] = {x, weight, bias};
  return x.graph().record("affine", std::move(y), inputs, [=](std::span<const double> g) {
    std::span<double> gx = grad_of(xp);
    std::span<double> gw = grad_of(wp);
    std::span<double> gb = grad_of(bp);
    const auto xd = xp->data();
    const auto wd = wp->data();
    for (std::size_t i = 0; i < in; ++i) {
      if (!gw.empty()) {
        for (std::size_t o = 0; o < out; ++o) gw[i * out + o] += xd[i] * g[o];
      }
      if (!gx.empty()) {
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) acc += wd[i * out + o] * g[o];
        gx[i] += acc;
      }
    }
    if (!gb.empty()) {
      for (std::size_t o = 0; o < out; ++o) gb[o] += g[o];
    }
  });
}

Var lookup(Var table, std::span<const std::size_t> indices) {
  const Tensor& tab = table.value();
  require_rank(tab, 2, "lookup", "table");
  const std::size_t vocab = tab.dim(0), dim = tab.dim(1);
  for (std::size_t id : indices) {
    if (id >= vocab) {
      throw IndexError("lookup: id " + std::to_string(id) + " out of range for table with " +
                       std::to_string(vocab) + " rows");
    }
  }
  Tensor y(Shape{indices.size(), dim});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = tab.data().subspan(indices[r] * dim, dim);
    std::copy(src.begin(), src.end(), y.data().begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  Tensor* tp = &mut(table);
  const Var inputs[] = {table};
  return table.graph().record(
      "lookup", std::move(y), inputs,
      [tp, dim, ids = std::vector<std::size_t>(indices.begin(), indices.end())](
          std::span<const double> g) {
        std::span<double> gt = grad_of(tp);
        if (gt.empty()) return;
        for (std::size_t r = 0; r < ids.size(); ++r) {
          double* dst = gt.data() + ids[r] * dim;
          const double* src = g.data() + r * dim;
          for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
        }
      });
}

Var concat_columns(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_columns: no operands");
  const std::size_t rows = parts[0].value().rank() == 2 ? parts[0].value().dim(0) : 0;
  std::vector<std::size_t> widths;
  std::vector<Tensor*> ptrs;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    require_rank(t, 2, "concat_columns", "operand");
    if (t.dim(0) != rows) {
      throw ShapeError("concat_columns: row mismatch " + shape_string(parts[0].value().shape()) +
                       " vs " + shape_string(t.shape()));
    }
    widths.push_back(t.dim(1));
    ptrs.push_back(&mut(p));
    total += t.dim(1);
  }
  Tensor y(Shape{rows, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < widths[k]; ++c) y.at(r, offset + c) = t.at(r, c);
    }
    offset += widths[k];
  }
  return parts[0].graph().record(
      "concat_columns", std::move(y), parts,
      [ptrs = std::move(ptrs), widths = std::move(widths), rows, total](std::span<const double> g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < ptrs.size(); ++k) {
          std::span<double> gp = grad_of(ptrs[k]);
          if (!gp.empty()) {
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += g[r * total + off + c];
            }
          }
          off += widths[k];
        }
      });
}

Var dropout(Var x, double keep_prob, Mode mode, Rng* rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("dropout: keep probability " + std::to_string(keep_prob) +
                      " outside (0, 1]");
  }
  const Tensor& in = x.value();
  std::vector<double> scale(in.size(), keep_prob);
  if (mode == Mode::Train) {
    if (rng == nullptr) throw std::logic_error("dropout: train mode requires a generator");
    for (double& s : scale) s = bernoulli(*rng, keep_prob) ? 1.0 : 0.0;
  }
  Tensor y(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] * scale[i];
  Tensor* xp = &mut(x);
  const Var inputs[] = {x};
  return x.graph().record("dropout", std::move(y), inputs,
                          [xp, scale = std::move(scale)](std::span<const double> g) {
                            std::span<double> gx = grad_of(xp);
                            if (gx.empty()) return;
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * scale[i];
                          });
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

Var softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& l = logits.value();
  require_rank(l, 1, "softmax_cross_entropy", "logits");
  const std::size_t k = l.dim(0);
  if (label >= k) {
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range for " + std::to_string(k) + " classes");
  }
  const double mx = *std::max_element(l.data().begin(), l.data().end());
  double z = 0.0;
  for (double v : l.data()) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  const double loss = log_z - l[label];
  Tensor* lp = &mut(logits);
  const Var inputs[] = {logits};
  return logits.graph().record(
      "softmax_cross_entropy", Tensor::scalar(loss), inputs, [lp, label](std::span<const double> g) {
        std::span<double> gl = grad_of(lp);
        if (gl.empty()) return;
        const std::vector<double> p = softmax(lp->data());
        for (std::size_t i = 0; i < p.size(); ++i) {
          gl[i] += g[0] * (p[i] - (i == label ? 1.0 : 0.0));
        }
      });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  Tensor* xp = &mut(x);
  const Var inputs[] = {x};
  return x.graph().record("sum", Tensor::scalar(total), inputs, [xp](std::span<const double> g) {
    std::span<double> gx = grad_of(xp);
    for (double& v : gx) v += g[0];
  });
}

Var mean(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("mean: no operands");
  double total = 0.0;
  std::vector<Tensor*> ptrs;
  for (const Var& s : scalars) {
    const Tensor& t = s.value();
    if (t.size() != 1) throw ShapeError("mean: operand of shape " + shape_string(t.shape()) + " is not scalar");
    total += t[0];
    ptrs.push_back(&mut(s));
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  return scalars[0].graph().record("mean", Tensor::scalar(total * inv), scalars,
                                   [ptrs = std::move(ptrs), inv](std::span<const double> g) {
                                     for (Tensor* p : ptrs) {
                                       std::span<double> gp = grad_of(p);
                                       if (!gp.empty()) gp[0] += g[0] * inv;
                                     }
                                   });
}

}  // namespace rescnn
