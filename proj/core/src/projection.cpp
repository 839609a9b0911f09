#include "audiorank/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "audiorank/linalg.hpp"
#include "audiorank/rng.hpp"

namespace audiorank {

namespace {
constexpr double kDegenerateNorm = 1e-12;

DenseMatrix add_row_bias(DenseMatrix m, const std::vector<double>& bias) {
  if (bias.size() != m.cols()) {
    raise(errc::dimension_mismatch, "bias length " +
                                        std::to_string(bias.size()) +
                                        " != cols " + std::to_string(m.cols()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += bias[j];
  }
  return m;
}

std::vector<double> column_sums(const DenseMatrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  }
  return out;
}

/// Backprop through one head given dL/d(outputs); inputs are frozen so no
/// input gradient is produced.
HeadGradients head_backward(const ProjectionHead& head, const HeadCache& cache,
                            const DenseMatrix& grad_out) {
  HeadGradients g;
  g.w2 = matmul(transpose(cache.hidden), grad_out);
  g.b2 = column_sums(grad_out);
  DenseMatrix grad_hidden = matmul(grad_out, transpose(head.w2));
  for (std::size_t i = 0; i < grad_hidden.rows(); ++i) {
    for (std::size_t j = 0; j < grad_hidden.cols(); ++j) {
      if (cache.pre_activation(i, j) <= 0.0) grad_hidden(i, j) = 0.0;
    }
  }
  g.w1 = matmul(transpose(cache.inputs), grad_hidden);
  g.b1 = column_sums(grad_hidden);
  return g;
}

void check_cache_head(const ProjectionHead& head, const HeadCache& cache,
                      const char* side) {
  if (cache.inputs.cols() != head.input_dim() ||
      cache.pre_activation.cols() != head.hidden_dim() ||
      cache.hidden.rows() != cache.inputs.rows() ||
      cache.pre_activation.rows() != cache.inputs.rows()) {
    raise(errc::stale_cache,
          std::string(side) + " cache does not match the model dimensions");
  }
}

}  // namespace

DenseMatrix head_forward(const ProjectionHead& head, const DenseMatrix& inputs,
                         HeadCache* cache) {
  if (inputs.cols() != head.input_dim()) {
    raise(errc::dimension_mismatch,
          "input dim " + std::to_string(inputs.cols()) + " != head dim " +
              std::to_string(head.input_dim()));
  }
  DenseMatrix pre = add_row_bias(matmul(inputs, head.w1), head.b1);
  DenseMatrix hidden = pre;
  for (double& v : hidden.values()) v = std::max(v, 0.0);
  DenseMatrix out = add_row_bias(matmul(hidden, head.w2), head.b2);
  if (cache != nullptr) {
    cache->inputs = inputs;
    cache->pre_activation = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

DenseMatrix score_matrix(const DualEncoder& model, const DenseMatrix& text_in,
                         const DenseMatrix& audio_in, ScoreCache* cache) {
  if (model.audio_head.output_dim() != model.text_head.output_dim()) {
    raise(errc::dimension_mismatch, "heads project to different output dims");
  }
  HeadCache text_cache;
  HeadCache audio_cache;
  DenseMatrix text_out = head_forward(model.text_head, text_in,
                                      cache != nullptr ? &text_cache : nullptr);
  DenseMatrix audio_out = head_forward(
      model.audio_head, audio_in, cache != nullptr ? &audio_cache : nullptr);

  std::vector<double> text_norms(text_out.rows());
  for (std::size_t i = 0; i < text_out.rows(); ++i) {
    text_norms[i] = l2_norm(text_out.row(i));
    if (text_norms[i] < kDegenerateNorm) {
      raise(errc::degenerate_vector,
            "projected text row " + std::to_string(i) + " has norm below 1e-12");
    }
  }
  std::vector<double> audio_norms(audio_out.rows());
  for (std::size_t j = 0; j < audio_out.rows(); ++j) {
    audio_norms[j] = l2_norm(audio_out.row(j));
    if (audio_norms[j] < kDegenerateNorm) {
      raise(errc::degenerate_vector, "projected audio row " +
                                         std::to_string(j) +
                                         " has norm below 1e-12");
    }
  }

  DenseMatrix raw(text_out.rows(), audio_out.rows());
  for (std::size_t i = 0; i < text_out.rows(); ++i) {
    for (std::size_t j = 0; j < audio_out.rows(); ++j) {
      raw(i, j) =
          dot(text_out.row(i), audio_out.row(j)) / (text_norms[i] * audio_norms[j]);
    }
  }
  DenseMatrix clamped = raw;
  for (double& v : clamped.values()) v = std::clamp(v, -1.0, 1.0);

  if (cache != nullptr) {
    cache->text = std::move(text_cache);
    cache->audio = std::move(audio_cache);
    cache->text_out = std::move(text_out);
    cache->audio_out = std::move(audio_out);
    cache->text_norms = std::move(text_norms);
    cache->audio_norms = std::move(audio_norms);
    cache->raw_scores = std::move(raw);
  }
  return clamped;
}

ModelGradients backward(const DualEncoder& model, const ScoreCache& cache,
                        const DenseMatrix& grad_scores) {
  check_cache_head(model.text_head, cache.text, "text");
  check_cache_head(model.audio_head, cache.audio, "audio");
  const std::size_t n = cache.text_out.rows();
  const std::size_t m = cache.audio_out.rows();
  if (grad_scores.rows() != n || grad_scores.cols() != m ||
      cache.raw_scores.rows() != n || cache.raw_scores.cols() != m) {
    raise(errc::shape_mismatch,
          "grad_scores " + std::to_string(grad_scores.rows()) + "x" +
              std::to_string(grad_scores.cols()) + " vs scores " +
              std::to_string(n) + "x" + std::to_string(m));
  }
  const std::size_t k = cache.text_out.cols();

  // Cosine Jacobian: with u = text row i, v = audio row j, s = cos(u, v):
  //   ds/du = v/(|u||v|) - s*u/|u|^2,  ds/dv symmetric.
  DenseMatrix grad_text(n, k);
  DenseMatrix grad_audio(m, k);
  for (std::size_t i = 0; i < n; ++i) {
    const double tn = cache.text_norms[i];
    double diag_acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = grad_scores(i, j);
      if (g == 0.0) continue;
      const double w = g / (tn * cache.audio_norms[j]);
      for (std::size_t c = 0; c < k; ++c) {
        grad_text(i, c) += w * cache.audio_out(j, c);
      }
      diag_acc += g * cache.raw_scores(i, j);
    }
    const double scale = diag_acc / (tn * tn);
    for (std::size_t c = 0; c < k; ++c) {
      grad_text(i, c) -= scale * cache.text_out(i, c);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double an = cache.audio_norms[j];
    double diag_acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad_scores(i, j);
      if (g == 0.0) continue;
      const double w = g / (cache.text_norms[i] * an);
      for (std::size_t c = 0; c < k; ++c) {
        grad_audio(j, c) += w * cache.text_out(i, c);
      }
      diag_acc += g * cache.raw_scores(i, j);
    }
    const double scale = diag_acc / (an * an);
    for (std::size_t c = 0; c < k; ++c) {
      grad_audio(j, c) -= scale * cache.audio_out(j, c);
    }
  }

  ModelGradients grads;
  grads.text = head_backward(model.text_head, cache.text, grad_text);
  grads.audio = head_backward(model.audio_head, cache.audio, grad_audio);
  return grads;
}

DualEncoder init_model(std::uint64_t seed, std::size_t d_audio,
                       std::size_t d_text, std::size_t d_hidden,
                       std::size_t d_out) {
  if (d_audio == 0 || d_text == 0 || d_hidden == 0 || d_out == 0) {
    raise(errc::invalid_dimension, "all model dimensions must be positive");
  }
  Xoshiro256ss rng = Xoshiro256ss::stream(seed, RngStream::model_init);
  auto make_head = [&rng](std::size_t d_in, std::size_t hidden,
                          std::size_t out) {
    ProjectionHead head;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d_in));
    head.w1 = DenseMatrix(d_in, hidden);
    for (double& v : head.w1.values()) v = rng.uniform(-s1, s1);
    head.b1.assign(hidden, 0.0);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    head.w2 = DenseMatrix(hidden, out);
    for (double& v : head.w2.values()) v = rng.uniform(-s2, s2);
    head.b2.assign(out, 0.0);
    return head;
  };
  DualEncoder model;
  model.audio_head = make_head(d_audio, d_hidden, d_out);
  model.text_head = make_head(d_text, d_hidden, d_out);
  return model;
}

}  // namespace audiorank
