#include "lsf/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/rng.hpp"

namespace lsf {

namespace {

void check_same_shape(const FeatureBlock& a, const FeatureBlock& b, const char* op) {
  require(a.same_shape(b), std::string(op) + ": teacher/student blocks differ in shape");
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

FcaResult fca_loss(const FeatureBlock& teacher, const FeatureBlock& student) {
  check_same_shape(teacher, student, "fca_loss");
  require(teacher.count >= 1, "fca_loss: empty proposal set");

  const std::size_t per = teacher.proposal_size();
  const double inv_n = 1.0 / static_cast<double>(teacher.count);

  FcaResult out;
  out.grad_student = FeatureBlock::zeros(student.count, student.height, student.width,
                                         student.channels);
  for (int i = 0; i < teacher.count; ++i) {
    const double* fs = teacher.proposal(i);
    const double* fa = student.proposal(i);
    double sq = 0.0;
    for (std::size_t k = 0; k < per; ++k) {
      const double d = fa[k] - fs[k];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    out.loss += norm * inv_n;
    if (norm > 0.0) {
      double* g = out.grad_student.proposal(i);
      const double scale = inv_n / norm;
      for (std::size_t k = 0; k < per; ++k) g[k] = (fa[k] - fs[k]) * scale;
    }
  }
  return out;
}

std::size_t EmbeddingNet::param_count(int input_dim, int hidden_dim, int output_dim) {
  return static_cast<std::size_t>(hidden_dim) * input_dim + hidden_dim +
         static_cast<std::size_t>(output_dim) * hidden_dim + output_dim;
}

std::string EmbeddingNet::config_string() const {
  return "embed-v1|in=" + std::to_string(input_dim) + "|hidden=" + std::to_string(hidden_dim) +
         "|out=" + std::to_string(output_dim);
}

EmbeddingNet EmbeddingNet::seeded(int input_dim, int hidden_dim, int output_dim,
                                  std::uint64_t seed) {
  require(input_dim >= 1 && hidden_dim >= 1 && output_dim >= 1,
          "EmbeddingNet: dimensions must be positive");
  EmbeddingNet net;
  net.input_dim = input_dim;
  net.hidden_dim = hidden_dim;
  net.output_dim = output_dim;
  net.params.assign(param_count(input_dim, hidden_dim, output_dim), 0.0);

  SeededRng rng(mix_seed(seed, 0xE3BEDULL));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  double* w = net.params.data();
  for (int i = 0; i < hidden_dim * input_dim; ++i) w[i] = rng.uniform(-s1, s1);
  w += static_cast<std::size_t>(hidden_dim) * input_dim + hidden_dim;  // biases stay zero
  for (int i = 0; i < output_dim * hidden_dim; ++i) w[i] = rng.uniform(-s2, s2);
  return net;
}

std::vector<double> embed(const EmbeddingNet& net, const double* x) {
  std::vector<double> hidden(static_cast<std::size_t>(net.hidden_dim));
  std::vector<double> out(static_cast<std::size_t>(net.output_dim));
  const double* w1 = net.w1();
  const double* b1 = net.b1();
  for (int i = 0; i < net.hidden_dim; ++i) {
    hidden[i] = std::tanh(dot(w1 + static_cast<std::size_t>(i) * net.input_dim, x,
                              static_cast<std::size_t>(net.input_dim)) + b1[i]);
  }
  const double* w2 = net.w2();
  const double* b2 = net.b2();
  for (int i = 0; i < net.output_dim; ++i) {
    out[i] = dot(w2 + static_cast<std::size_t>(i) * net.hidden_dim, hidden.data(),
                 static_cast<std::size_t>(net.hidden_dim)) + b2[i];
  }
  return out;
}

std::vector<double> embed(const EmbeddingNet& net, const std::vector<double>& x) {
  require(x.size() == static_cast<std::size_t>(net.input_dim), "embed: input size mismatch");
  return embed(net, x.data());
}

std::vector<double> embed_jvp(const EmbeddingNet& net, const double* x, const double* v) {
  const double* w1 = net.w1();
  const double* b1 = net.b1();
  std::vector<double> dh(static_cast<std::size_t>(net.hidden_dim));
  for (int i = 0; i < net.hidden_dim; ++i) {
    const double* row = w1 + static_cast<std::size_t>(i) * net.input_dim;
    const double u = dot(row, x, static_cast<std::size_t>(net.input_dim)) + b1[i];
    const double t = std::tanh(u);
    dh[i] = (1.0 - t * t) * dot(row, v, static_cast<std::size_t>(net.input_dim));
  }
  const double* w2 = net.w2();
  std::vector<double> out(static_cast<std::size_t>(net.output_dim));
  for (int i = 0; i < net.output_dim; ++i) {
    out[i] = dot(w2 + static_cast<std::size_t>(i) * net.hidden_dim, dh.data(),
                 static_cast<std::size_t>(net.hidden_dim));
  }
  return out;
}

Matrix embed_block(const EmbeddingNet& net, const FeatureBlock& block) {
  require(block.proposal_size() == static_cast<std::size_t>(net.input_dim),
          "embed_block: flattened proposal size does not match the net input");
  Matrix out = Matrix::zeros(block.count, net.output_dim);
  for (int i = 0; i < block.count; ++i) {
    const std::vector<double> e = embed(net, block.proposal(i));
    std::copy(e.begin(), e.end(), out.row(i));
  }
  return out;
}

EdgeMatrices edge_matrix(const Matrix& embeddings) {
  const int n = embeddings.rows;
  require(n >= 1, "edge_matrix: no embeddings");

  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    norms[i] = std::sqrt(dot(embeddings.row(i), embeddings.row(i),
                             static_cast<std::size_t>(embeddings.cols)));
    require(norms[i] > 1e-12, "edge_matrix: embedding " + std::to_string(i) + " has zero norm");
  }

  EdgeMatrices out;
  out.raw = Matrix::zeros(n, n);
  out.normalized = Matrix::zeros(n, n);
  for (int i = 0; i < n; ++i) {
    out.raw.at(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double cosine = dot(embeddings.row(i), embeddings.row(j),
                                static_cast<std::size_t>(embeddings.cols)) /
                            (norms[i] * norms[j]);
      out.raw.at(i, j) = cosine;
      out.raw.at(j, i) = cosine;  // one evaluation per pair keeps it exactly symmetric
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.normalized.at(i, j) =
          std::clamp(0.5 * (1.0 + out.raw.at(i, j)), kEdgeClamp, 1.0 - kEdgeClamp);
    }
  }
  return out;
}

Matrix discrepancy_matrix(const std::vector<Box3D>& rois, double epsilon) {
  require(epsilon > 0.0, "discrepancy_matrix: epsilon must be positive");
  const int n = static_cast<int>(rois.size());
  Matrix d = Matrix::zeros(n, n);
  for (int i = 0; i < n; ++i) {
    d.at(i, i) = 1.0 / epsilon;
    for (int m = i + 1; m < n; ++m) {
      const Box3D& a = rois[static_cast<std::size_t>(i)];
      const Box3D& b = rois[static_cast<std::size_t>(m)];
      const double dc = std::sqrt((a.cx - b.cx) * (a.cx - b.cx) + (a.cy - b.cy) * (a.cy - b.cy) +
                                  (a.cz - b.cz) * (a.cz - b.cz));
      const double dd = std::sqrt((a.l - b.l) * (a.l - b.l) + (a.w - b.w) * (a.w - b.w) +
                                  (a.h - b.h) * (a.h - b.h));
      const double dr = yaw_distance(a.yaw, b.yaw);
      const double value = 1.0 / (dc + dd + dr + epsilon);
      d.at(i, m) = value;
      d.at(m, i) = value;
    }
  }
  return d;
}

Matrix relationship_matrix(const Matrix& discrepancy, double lambda) {
  require(lambda >= 0.0, "relationship_matrix: lambda must be >= 0");
  require(discrepancy.rows == discrepancy.cols, "relationship_matrix: D must be square");
  Matrix r = Matrix::zeros(discrepancy.rows, discrepancy.cols);
  for (int i = 0; i < r.rows; ++i) {
    for (int j = 0; j < r.cols; ++j) {
      r.at(i, j) = (i == j ? 1.0 : 0.0) + lambda * discrepancy.at(i, j);
    }
  }
  return r;
}

double binary_kl(double a, double b) {
  return a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
}

namespace {

void check_normalized(const Matrix& m, const char* name) {
  for (double v : m.v) {
    require(v >= kEdgeClamp && v <= 1.0 - kEdgeClamp,
            std::string("gera_loss: ") + name + " contains non-normalized edge values");
  }
}

}  // namespace

GeraLossResult gera_loss(const Matrix& student_normalized, const Matrix& teacher_normalized,
                         const Matrix& relationship) {
  const int n = student_normalized.rows;
  require(n >= 1 && student_normalized.cols == n, "gera_loss: student edges must be square");
  require(teacher_normalized.rows == n && teacher_normalized.cols == n,
          "gera_loss: teacher/student edge dimensions differ");
  require(relationship.rows == n && relationship.cols == n,
          "gera_loss: relationship matrix dimension mismatch");
  check_normalized(student_normalized, "student");
  check_normalized(teacher_normalized, "teacher");

  // Factored evaluation. With s = R*1, lnB/ln1mB the teacher logs:
  //   loss = sum_ij [ H(a_ij) s_i s_j - a_ij (R lnB R^T)_ij
  //                   - (1 - a_ij) (R ln1mB R^T)_ij ]
  // which avoids the quartic loop the brute-force oracle uses.
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) s[i] += relationship.at(i, m);
  }

  Matrix ln_b = Matrix::zeros(n, n);
  Matrix ln_1mb = Matrix::zeros(n, n);
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      ln_b.at(m, k) = std::log(teacher_normalized.at(m, k));
      ln_1mb.at(m, k) = std::log(1.0 - teacher_normalized.at(m, k));
    }
  }

  const auto sandwich = [&](const Matrix& mid) {
    Matrix tmp = Matrix::zeros(n, n);  // R * mid
    for (int i = 0; i < n; ++i) {
      for (int m = 0; m < n; ++m) {
        const double r = relationship.at(i, m);
        if (r == 0.0) continue;
        for (int k = 0; k < n; ++k) tmp.at(i, k) += r * mid.at(m, k);
      }
    }
    Matrix out = Matrix::zeros(n, n);  // tmp * R^T
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += tmp.at(i, k) * relationship.at(j, k);
        out.at(i, j) = acc;
      }
    }
    return out;
  };

  const Matrix rb = sandwich(ln_b);
  const Matrix rb1 = sandwich(ln_1mb);

  GeraLossResult out;
  out.grad_student_edges = Matrix::zeros(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = student_normalized.at(i, j);
      const double entropy = a * std::log(a) + (1.0 - a) * std::log(1.0 - a);
      out.loss += entropy * s[i] * s[j] - a * rb.at(i, j) - (1.0 - a) * rb1.at(i, j);
      out.grad_student_edges.at(i, j) =
          (std::log(a) - std::log(1.0 - a)) * s[i] * s[j] - (rb.at(i, j) - rb1.at(i, j));
    }
  }
  return out;
}

GeraForward gera_forward(const EmbeddingNet& net, const FeatureBlock& student_block,
                         const Matrix& teacher_normalized, const Matrix& relationship) {
  GeraForward fwd;
  const int n = student_block.count;
  require(n >= 1, "gera_forward: empty student block");
  require(student_block.proposal_size() == static_cast<std::size_t>(net.input_dim),
          "gera_forward: proposal size does not match the embedding net");

  fwd.block_height = student_block.height;
  fwd.block_width = student_block.width;
  fwd.block_channels = student_block.channels;
  fwd.inputs = Matrix::zeros(n, net.input_dim);
  fwd.hidden = Matrix::zeros(n, net.hidden_dim);
  fwd.embeddings = Matrix::zeros(n, net.output_dim);

  const double* w1 = net.w1();
  const double* b1 = net.b1();
  const double* w2 = net.w2();
  const double* b2 = net.b2();
  for (int i = 0; i < n; ++i) {
    const double* x = student_block.proposal(i);
    std::copy(x, x + net.input_dim, fwd.inputs.row(i));
    double* h = fwd.hidden.row(i);
    for (int k = 0; k < net.hidden_dim; ++k) {
      h[k] = std::tanh(dot(w1 + static_cast<std::size_t>(k) * net.input_dim, x,
                           static_cast<std::size_t>(net.input_dim)) + b1[k]);
    }
    double* e = fwd.embeddings.row(i);
    for (int k = 0; k < net.output_dim; ++k) {
      e[k] = dot(w2 + static_cast<std::size_t>(k) * net.hidden_dim, h,
                 static_cast<std::size_t>(net.hidden_dim)) + b2[k];
    }
  }

  fwd.norms.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fwd.norms[i] = std::sqrt(dot(fwd.embeddings.row(i), fwd.embeddings.row(i),
                                 static_cast<std::size_t>(net.output_dim)));
  }
  fwd.student_edges = edge_matrix(fwd.embeddings);

  fwd.clamp_mask = Matrix::zeros(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double half = 0.5 * (1.0 + fwd.student_edges.raw.at(i, j));
      fwd.clamp_mask.at(i, j) = (half > kEdgeClamp && half < 1.0 - kEdgeClamp) ? 1.0 : 0.0;
    }
  }

  fwd.teacher_normalized = teacher_normalized;
  fwd.relationship = relationship;
  fwd.loss = gera_loss(fwd.student_edges.normalized, teacher_normalized, relationship).loss;
  fwd.valid = true;
  return fwd;
}

GeraGradients gera_backward_to_features(const EmbeddingNet& net, const GeraForward& cache) {
  require(cache.valid, "gera_backward_to_features: forward cache missing");
  const int n = cache.embeddings.rows;
  const int out_dim = net.output_dim;

  const GeraLossResult at_edges =
      gera_loss(cache.student_edges.normalized, cache.teacher_normalized, cache.relationship);

  // d loss / d raw cosine; the clamp zeroes saturated entries and the
  // diagonal (raw value 1) never moves.
  Matrix d_raw = Matrix::zeros(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      d_raw.at(i, j) = 0.5 * at_edges.grad_student_edges.at(i, j) * cache.clamp_mask.at(i, j);
    }
  }

  // d loss / d embedding rows through the cosine.
  Matrix d_embed = Matrix::zeros(n, out_dim);
  for (int i = 0; i < n; ++i) {
    const double* ei = cache.embeddings.row(i);
    const double ni = cache.norms[i];
    double* gi = d_embed.row(i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double g = d_raw.at(i, j) + d_raw.at(j, i);
      if (g == 0.0) continue;
      const double* ej = cache.embeddings.row(j);
      const double nj = cache.norms[j];
      const double cosine = cache.student_edges.raw.at(i, j);
      const double inv = 1.0 / (ni * nj);
      const double self = cosine / (ni * ni);
      for (int k = 0; k < out_dim; ++k) gi[k] += g * (ej[k] * inv - self * ei[k]);
    }
  }

  // Backward through the two affine layers.
  GeraGradients grads;
  grads.features =
      FeatureBlock::zeros(n, cache.block_height, cache.block_width, cache.block_channels);
  grads.net_params.assign(net.params.size(), 0.0);

  const double* w1 = net.w1();
  const double* w2 = net.w2();
  double* g_w1 = grads.net_params.data();
  double* g_b1 = g_w1 + static_cast<std::size_t>(net.hidden_dim) * net.input_dim;
  double* g_w2 = g_b1 + net.hidden_dim;
  double* g_b2 = g_w2 + static_cast<std::size_t>(out_dim) * net.hidden_dim;

  std::vector<double> dh(static_cast<std::size_t>(net.hidden_dim));
  for (int i = 0; i < n; ++i) {
    const double* de = d_embed.row(i);
    const double* h = cache.hidden.row(i);
    const double* x = cache.inputs.row(i);

    std::fill(dh.begin(), dh.end(), 0.0);
    for (int k = 0; k < out_dim; ++k) {
      const double g = de[k];
      if (g == 0.0) continue;
      g_b2[k] += g;
      const double* w2_row = w2 + static_cast<std::size_t>(k) * net.hidden_dim;
      double* g_w2_row = g_w2 + static_cast<std::size_t>(k) * net.hidden_dim;
      for (int m = 0; m < net.hidden_dim; ++m) {
        g_w2_row[m] += g * h[m];
        dh[m] += g * w2_row[m];
      }
    }

    double* dx = grads.features.proposal(i);
    for (int m = 0; m < net.hidden_dim; ++m) {
      const double du = dh[m] * (1.0 - h[m] * h[m]);
      if (du == 0.0) continue;
      g_b1[m] += du;
      const double* w1_row = w1 + static_cast<std::size_t>(m) * net.input_dim;
      double* g_w1_row = g_w1 + static_cast<std::size_t>(m) * net.input_dim;
      for (int k = 0; k < net.input_dim; ++k) {
        g_w1_row[k] += du * x[k];
        dx[k] += du * w1_row[k];
      }
    }
  }
  return grads;
}

}  // namespace lsf
