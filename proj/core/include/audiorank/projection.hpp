#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "audiorank/matrix.hpp"

namespace audiorank {

/// Two affine layers with a ReLU in between, applied to frozen backbone
/// embeddings. W1 is d_in x d_hidden, W2 is d_hidden x d_out.
struct ProjectionHead {
  DenseMatrix w1;
  std::vector<double> b1;
  DenseMatrix w2;
  std::vector<double> b2;

  std::size_t input_dim() const noexcept { return w1.rows(); }
  std::size_t hidden_dim() const noexcept { return w1.cols(); }
  std::size_t output_dim() const noexcept { return w2.cols(); }
};

struct DualEncoder {
  ProjectionHead audio_head;
  ProjectionHead text_head;
};

/// Predicted relevances: cosine of projected embeddings, rows are caption
/// (query) ids and columns audio ids.
struct ScoreMatrix {
  DenseMatrix values;  // entries in [-1, 1]
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

struct HeadCache {
  DenseMatrix inputs;
  DenseMatrix pre_activation;  // inputs*W1 + b1, kept for the ReLU mask
  DenseMatrix hidden;          // relu(pre_activation)
};

struct ScoreCache {
  HeadCache text;
  HeadCache audio;
  DenseMatrix text_out;   // n x d_out projections
  DenseMatrix audio_out;  // m x d_out projections
  std::vector<double> text_norms;
  std::vector<double> audio_norms;
  DenseMatrix raw_scores;  // cosines before clamping
};

struct HeadGradients {
  DenseMatrix w1;
  std::vector<double> b1;
  DenseMatrix w2;
  std::vector<double> b2;
};

struct ModelGradients {
  HeadGradients audio;
  HeadGradients text;
};

/// relu(inputs*W1 + b1)*W2 + b2. Pass a cache to retain activations for
/// backward.
DenseMatrix head_forward(const ProjectionHead& head, const DenseMatrix& inputs,
                         HeadCache* cache = nullptr);

/// Projects both sides and scores every text row against every audio row.
DenseMatrix score_matrix(const DualEncoder& model, const DenseMatrix& text_in,
                         const DenseMatrix& audio_in,
                         ScoreCache* cache = nullptr);

/// Exact gradients of the loss w.r.t. all eight head parameter tensors,
/// given dL/dS and the caches of the matching forward pass. Includes the
/// cosine-normalization Jacobian.
ModelGradients backward(const DualEncoder& model, const ScoreCache& cache,
                        const DenseMatrix& grad_scores);

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases, fully
/// reproducible for a given seed.
DualEncoder init_model(std::uint64_t seed, std::size_t d_audio,
                       std::size_t d_text, std::size_t d_hidden,
                       std::size_t d_out);

}  // namespace audiorank
