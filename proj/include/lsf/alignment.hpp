#pragma once

#include <cstdint>
#include <vector>

#include "lsf/feature_block.hpp"
#include "lsf/geometry.hpp"

namespace lsf {

/// Proposal features extracted over a shared ROI set; teacher and student
/// blocks in one alignment call share shape and ROI order.
struct ProposalFeatures {
  FeatureBlock block;
  std::vector<Box3D> rois;
};

/// Normalized edges live in [kEdgeClamp, 1 - kEdgeClamp] so the binary KL
/// between them stays finite.
constexpr double kEdgeClamp = 1e-4;

// ---------------------------------------------------------------------------
// Feature content alignment: mean L2 distance between per-proposal blocks.

struct FcaResult {
  double loss = 0.0;
  FeatureBlock grad_student;  // d loss / d student block, 0 at the kink
};

FcaResult fca_loss(const FeatureBlock& teacher, const FeatureBlock& student);

// ---------------------------------------------------------------------------
// Proposal embeddings: flatten -> affine -> tanh -> affine.

struct EmbeddingNet {
  int input_dim = 0;
  int hidden_dim = 0;
  int output_dim = 0;
  std::vector<double> params;  // W1 (hidden x input), b1, W2 (out x hidden), b2

  static EmbeddingNet seeded(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);
  static std::size_t param_count(int input_dim, int hidden_dim, int output_dim);
  std::string config_string() const;  // identifies the layout for checkpoints

  const double* w1() const { return params.data(); }
  const double* b1() const { return params.data() + static_cast<std::size_t>(hidden_dim) * input_dim; }
  const double* w2() const { return b1() + hidden_dim; }
  const double* b2() const { return w2() + static_cast<std::size_t>(output_dim) * hidden_dim; }
};

/// Forward pass for one flattened proposal (length input_dim).
std::vector<double> embed(const EmbeddingNet& net, const double* x);
std::vector<double> embed(const EmbeddingNet& net, const std::vector<double>& x);

/// Directional derivative of embed at x along v.
std::vector<double> embed_jvp(const EmbeddingNet& net, const double* x, const double* v);

/// Embeddings of every proposal in a block, one row per proposal.
Matrix embed_block(const EmbeddingNet& net, const FeatureBlock& block);

// ---------------------------------------------------------------------------
// Edge and relationship matrices.

struct EdgeMatrices {
  Matrix raw;         // cosine similarities, diagonal exactly 1
  Matrix normalized;  // (1 + raw) / 2 clamped into [kEdgeClamp, 1 - kEdgeClamp]
};

/// Throws when an embedding has norm <= 1e-12.
EdgeMatrices edge_matrix(const Matrix& embeddings);

/// D[i][m] = 1 / (|c_i - c_m| + |d_i - d_m| + |r_i - r_m| + epsilon), with
/// the yaw difference wrapped to [0, pi].
Matrix discrepancy_matrix(const std::vector<Box3D>& rois, double epsilon);

/// R = I + lambda * D.
Matrix relationship_matrix(const Matrix& discrepancy, double lambda);

// ---------------------------------------------------------------------------
// Graph-based embedding relationship alignment.

struct GeraLossResult {
  double loss = 0.0;
  Matrix grad_student_edges;  // d loss / d normalized student edge
};

/// sum_{i,j,m,n} kl(pa[i][j], ps[m][n]) * R[i][m] * R[j][n] with the binary
/// KL kl(a,b) = a ln(a/b) + (1-a) ln((1-a)/(1-b)). The teacher edges are
/// constants. Throws on shape mismatch or edges outside the clamp range.
GeraLossResult gera_loss(const Matrix& student_normalized, const Matrix& teacher_normalized,
                         const Matrix& relationship);

/// Cached forward activations for the full student-side chain.
struct GeraForward {
  bool valid = false;
  double loss = 0.0;
  int block_height = 0;  // student block shape, for the gradient tensor
  int block_width = 0;
  int block_channels = 0;
  Matrix inputs;      // N_r x input_dim flattened proposals
  Matrix hidden;      // N_r x hidden (post-nonlinearity)
  Matrix embeddings;  // N_r x out
  std::vector<double> norms;
  EdgeMatrices student_edges;
  Matrix clamp_mask;  // 1 where the normalized edge is strictly interior
  Matrix teacher_normalized;
  Matrix relationship;
};

GeraForward gera_forward(const EmbeddingNet& net, const FeatureBlock& student_block,
                         const Matrix& teacher_normalized, const Matrix& relationship);

struct GeraGradients {
  FeatureBlock features;           // d loss / d student block
  std::vector<double> net_params;  // d loss / d embedding-net parameters
};

/// Chain rule from the cached forward down to the student features and the
/// embedding parameters. Throws when the cache is missing.
GeraGradients gera_backward_to_features(const EmbeddingNet& net, const GeraForward& cache);

double binary_kl(double a, double b);

}  // namespace lsf
