#include "rsa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rsa/errors.hpp"

namespace rsa::nn {

namespace {

Var make_node(Mat val, std::vector<Var> parents, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  return n;
}

void check(bool cond, const char* what) {
  if (!cond) fail(Errc::config_error, std::string("shape mismatch in ") + what);
}

}  // namespace

Var leaf(Mat v) { return make_node(std::move(v), {}, nullptr); }

Var matmul(const Var& a, const Var& b) {
  check(a->val.cols == b->val.rows, "matmul");
  const Mat& A = a->val;
  const Mat& B = b->val;
  Mat out(A.rows, B.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.cols; ++k) {
      double aik = A.at(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < B.cols; ++j) out.at(i, j) += aik * B.at(k, j);
    }
  return make_node(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    const Mat& G = self.grad;
    // dA += G * B^T ; dB += A^T * G
    for (size_t i = 0; i < pa.val.rows; ++i)
      for (size_t j = 0; j < G.cols; ++j) {
        double g = G.at(i, j);
        if (g == 0.0) continue;
        for (size_t k = 0; k < pa.val.cols; ++k) {
          pa.grad.at(i, k) += g * pb.val.at(k, j);
          pb.grad.at(k, j) += pa.val.at(i, k) * g;
        }
      }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  check(a->val.cols == b->val.cols, "matmul_nt");
  const Mat& A = a->val;
  const Mat& B = b->val;
  Mat out(A.rows, B.rows);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < B.rows; ++j) {
      double s = 0.0;
      for (size_t k = 0; k < A.cols; ++k) s += A.at(i, k) * B.at(j, k);
      out.at(i, j) = s;
    }
  return make_node(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    const Mat& G = self.grad;
    // C = A B^T: dA += G * B ; dB += G^T * A
    for (size_t i = 0; i < pa.val.rows; ++i)
      for (size_t j = 0; j < pb.val.rows; ++j) {
        double g = G.at(i, j);
        if (g == 0.0) continue;
        for (size_t k = 0; k < pa.val.cols; ++k) {
          pa.grad.at(i, k) += g * pb.val.at(j, k);
          pb.grad.at(j, k) += g * pa.val.at(i, k);
        }
      }
  });
}

Var add(const Var& a, const Var& b) {
  check(a->val.rows == b->val.rows && a->val.cols == b->val.cols, "add");
  Mat out = a->val;
  for (size_t i = 0; i < out.size(); ++i) out.a[i] += b->val.a[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      p->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad.a[i] += self.grad.a[i];
    }
  });
}

Var add_rowvec(const Var& m, const Var& row) {
  check(row->val.rows == 1 && row->val.cols == m->val.cols, "add_rowvec");
  Mat out = m->val;
  for (size_t i = 0; i < out.rows; ++i)
    for (size_t j = 0; j < out.cols; ++j) out.at(i, j) += row->val.at(0, j);
  return make_node(std::move(out), {m, row}, [](Node& self) {
    Node& pm = *self.parents[0];
    Node& pr = *self.parents[1];
    pm.ensure_grad();
    pr.ensure_grad();
    for (size_t i = 0; i < self.grad.rows; ++i)
      for (size_t j = 0; j < self.grad.cols; ++j) {
        pm.grad.at(i, j) += self.grad.at(i, j);
        pr.grad.at(0, j) += self.grad.at(i, j);
      }
  });
}

Var scale(const Var& a, double s) {
  Mat out = a->val;
  for (double& v : out.a) v *= s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad.a[i] += s * self.grad.a[i];
  });
}

Var slice_cols(const Var& a, size_t c0, size_t n) {
  check(c0 + n <= a->val.cols, "slice_cols");
  Mat out(a->val.rows, n);
  for (size_t i = 0; i < out.rows; ++i)
    for (size_t j = 0; j < n; ++j) out.at(i, j) = a->val.at(i, c0 + j);
  return make_node(std::move(out), {a}, [c0](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.rows; ++i)
      for (size_t j = 0; j < self.grad.cols; ++j) p.grad.at(i, c0 + j) += self.grad.at(i, j);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols");
  size_t rows = parts[0]->val.rows;
  size_t cols = 0;
  for (const auto& p : parts) {
    check(p->val.rows == rows, "concat_cols");
    cols += p->val.cols;
  }
  Mat out(rows, cols);
  size_t off = 0;
  for (const auto& p : parts) {
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < p->val.cols; ++j) out.at(i, off + j) = p->val.at(i, j);
    off += p->val.cols;
  }
  return make_node(std::move(out), parts, [](Node& self) {
    size_t off = 0;
    for (auto& p : self.parents) {
      p->ensure_grad();
      for (size_t i = 0; i < p->val.rows; ++i)
        for (size_t j = 0; j < p->val.cols; ++j) p->grad.at(i, j) += self.grad.at(i, off + j);
      off += p->val.cols;
    }
  });
}

Var concat_rows(const Var& a, const Var& b) {
  check(a->val.cols == b->val.cols, "concat_rows");
  Mat out(a->val.rows + b->val.rows, a->val.cols);
  std::copy(a->val.a.begin(), a->val.a.end(), out.a.begin());
  std::copy(b->val.a.begin(), b->val.a.end(), out.a.begin() + a->val.size());
  return make_node(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (size_t i = 0; i < pa.val.size(); ++i) pa.grad.a[i] += self.grad.a[i];
    for (size_t i = 0; i < pb.val.size(); ++i) pb.grad.a[i] += self.grad.a[pa.val.size() + i];
  });
}

Var take_row(const Var& a, size_t r) {
  check(r < a->val.rows, "take_row");
  Mat out(1, a->val.cols);
  for (size_t j = 0; j < out.cols; ++j) out.at(0, j) = a->val.at(r, j);
  return make_node(std::move(out), {a}, [r](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t j = 0; j < self.grad.cols; ++j) p.grad.at(r, j) += self.grad.at(0, j);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  check(gain->val.rows == 1 && gain->val.cols == x->val.cols, "layer_norm gain");
  check(bias->val.rows == 1 && bias->val.cols == x->val.cols, "layer_norm bias");
  const Mat& X = x->val;
  const size_t d = X.cols;
  Mat out(X.rows, d);
  Mat xhat(X.rows, d);
  std::vector<double> inv_std(X.rows);
  for (size_t i = 0; i < X.rows; ++i) {
    double mu = 0.0;
    for (size_t j = 0; j < d; ++j) mu += X.at(i, j);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double c = X.at(i, j) - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (size_t j = 0; j < d; ++j) {
      xhat.at(i, j) = (X.at(i, j) - mu) * inv;
      out.at(i, j) = xhat.at(i, j) * gain->val.at(0, j) + bias->val.at(0, j);
    }
  }
  return make_node(std::move(out), {x, gain, bias},
                   [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pb = *self.parents[2];
    px.ensure_grad();
    pg.ensure_grad();
    pb.ensure_grad();
    const size_t d = px.val.cols;
    for (size_t i = 0; i < px.val.rows; ++i) {
      double sum_dxh = 0.0, sum_dxh_xh = 0.0;
      for (size_t j = 0; j < d; ++j) {
        double dy = self.grad.at(i, j);
        double xh = xhat.at(i, j);
        pg.grad.at(0, j) += dy * xh;
        pb.grad.at(0, j) += dy;
        double dxh = dy * pg.val.at(0, j);
        sum_dxh += dxh;
        sum_dxh_xh += dxh * xh;
      }
      double inv = inv_std[i];
      for (size_t j = 0; j < d; ++j) {
        double dxh = self.grad.at(i, j) * pg.val.at(0, j);
        px.grad.at(i, j) += inv * (dxh - sum_dxh / d - xhat.at(i, j) * sum_dxh_xh / d);
      }
    }
  });
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Var gelu(const Var& x) {
  Mat out = x->val;
  for (double& v : out.a) v = gelu_scalar(v);
  return make_node(std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double v = p.val.a[i];
      double phi = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
      double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      p.grad.a[i] += self.grad.a[i] * (phi + v * pdf);
    }
  });
}

Var softmax_rows_masked(const Var& scores, const std::vector<uint8_t>& col_valid) {
  const Mat& S = scores->val;
  check(col_valid.size() == S.cols, "softmax mask");
  Mat out(S.rows, S.cols);
  for (size_t i = 0; i < S.rows; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < S.cols; ++j)
      if (col_valid[j]) m = std::max(m, S.at(i, j));
    double sum = 0.0;
    for (size_t j = 0; j < S.cols; ++j) {
      if (!col_valid[j]) continue;
      out.at(i, j) = std::exp(S.at(i, j) - m);
      sum += out.at(i, j);
    }
    for (size_t j = 0; j < S.cols; ++j)
      if (col_valid[j]) out.at(i, j) /= sum;
  }
  return make_node(std::move(out), {scores}, [col_valid](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (size_t i = 0; i < self.val.rows; ++i) {
      double dot = 0.0;
      for (size_t j = 0; j < self.val.cols; ++j)
        if (col_valid[j]) dot += self.grad.at(i, j) * self.val.at(i, j);
      for (size_t j = 0; j < self.val.cols; ++j)
        if (col_valid[j])
          p.grad.at(i, j) += self.val.at(i, j) * (self.grad.at(i, j) - dot);
    }
  });
}

Var embedding(const Var& table, const Var& pos, const std::vector<int>& ids) {
  const Mat& T = table->val;
  const Mat& P = pos->val;
  check(T.cols == P.cols, "embedding");
  if (ids.size() > P.rows)
    fail(Errc::id_out_of_range, "sequence longer than positional table");
  Mat out(ids.size(), T.cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= T.rows)
      fail(Errc::id_out_of_range, "token id " + std::to_string(ids[i]) + " outside vocab");
    for (size_t j = 0; j < T.cols; ++j) out.at(i, j) = T.at(ids[i], j) + P.at(i, j);
  }
  return make_node(std::move(out), {table, pos}, [ids](Node& self) {
    Node& pt = *self.parents[0];
    Node& pp = *self.parents[1];
    pt.ensure_grad();
    pp.ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      for (size_t j = 0; j < self.grad.cols; ++j) {
        pt.grad.at(ids[i], j) += self.grad.at(i, j);
        pp.grad.at(i, j) += self.grad.at(i, j);
      }
  });
}

Var softmax_cross_entropy(const Var& logits, int target, double prob_floor) {
  check(logits->val.rows == 1, "softmax_cross_entropy");
  const size_t c = logits->val.cols;
  check(target >= 0 && static_cast<size_t>(target) < c, "softmax_cross_entropy target");
  double m = *std::max_element(logits->val.a.begin(), logits->val.a.end());
  std::vector<double> probs(c);
  double sum = 0.0;
  for (size_t j = 0; j < c; ++j) {
    probs[j] = std::exp(logits->val.at(0, j) - m);
    sum += probs[j];
  }
  for (double& p : probs) p /= sum;
  Mat out(1, 1);
  out.at(0, 0) = -std::log(std::max(probs[target], prob_floor));
  return make_node(std::move(out), {logits}, [probs, target](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    double g = self.grad.at(0, 0);
    for (size_t j = 0; j < probs.size(); ++j)
      p.grad.at(0, j) += g * (probs[j] - (static_cast<int>(j) == target ? 1.0 : 0.0));
  });
}

Var add_scaled(const Var& a, const Var& b, double coeff) {
  check(a->val.rows == b->val.rows && a->val.cols == b->val.cols, "add_scaled");
  Mat out = a->val;
  for (size_t i = 0; i < out.size(); ++i) out.a[i] += coeff * b->val.a[i];
  return make_node(std::move(out), {a, b}, [coeff](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      pa.grad.a[i] += self.grad.a[i];
      pb.grad.a[i] += coeff * self.grad.a[i];
    }
  });
}

Var mean_all(const std::vector<Var>& scalars) {
  check(!scalars.empty(), "mean_all");
  Mat out(1, 1);
  for (const auto& s : scalars) {
    check(s->val.rows == 1 && s->val.cols == 1, "mean_all");
    out.at(0, 0) += s->val.at(0, 0);
  }
  out.at(0, 0) /= static_cast<double>(scalars.size());
  return make_node(std::move(out), scalars, [](Node& self) {
    double g = self.grad.at(0, 0) / static_cast<double>(self.parents.size());
    for (auto& p : self.parents) {
      p->ensure_grad();
      p->grad.at(0, 0) += g;
    }
  });
}

void backward(const Var& loss) {
  if (loss->val.rows != 1 || loss->val.cols != 1)
    fail(Errc::config_error, "backward expects a 1x1 loss node");

  // Iterative post-order DFS, then reverse for the topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({loss.get(), 0});
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next].get();
      ++next;
      if (seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad();
  loss->grad.at(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() > 0) n->backprop(*n);
  }
}

}  // namespace rsa::nn
