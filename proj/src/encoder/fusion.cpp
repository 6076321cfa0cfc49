#include "ufin/encoder/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "ufin/error.hpp"

namespace ufin {

namespace {

Tensor tracked(Shape shape, double fill = 0.0) {
  Tensor t(std::move(shape), fill);
  t.enable_grad();
  return t;
}

}  // namespace

TextNorm::TextNorm(std::size_t d_v) : gain(tracked({d_v}, 1.0)), bias(tracked({d_v})) {}

Var TextNorm::forward(Var pooled) {
  Tape& t = pooled.tape();
  return layer_norm(pooled, t.param(gain), t.param(bias), gain.size());
}

void TextNorm::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + "ln_gain", &gain});
  out.push_back({prefix + "ln_bias", &bias});
}

SemanticFusion::SemanticFusion(std::size_t d_v, std::size_t experts, Rng& rng)
    : gate(tracked({d_v, experts})) {
  if (experts == 0) throw ConfigError("semantic fusion: need at least one expert");
  const double stddev = std::sqrt(2.0 / static_cast<double>(d_v));
  for (std::size_t j = 0; j < experts; ++j) {
    weights.push_back(tracked({d_v, d_v}));
    fill_normal(weights.back(), rng, stddev);
    biases.push_back(tracked({d_v}));
  }
  fill_normal(gate, rng, 0.01);
}

SemanticFusion::Output SemanticFusion::forward(Var s) {
  Tape& t = s.tape();
  Var g = softmax_rows(linear(s, t.param(gate), Var()));
  std::vector<Var> outs;
  outs.reserve(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    outs.push_back(relu(linear(s, t.param(weights[j]), t.param(biases[j]))));
  }
  return {weighted_sum(outs, g), g};
}

void SemanticFusion::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out.push_back({prefix + "expert" + std::to_string(j) + "/weight", &weights[j]});
    out.push_back({prefix + "expert" + std::to_string(j) + "/bias", &biases[j]});
  }
  out.push_back({prefix + "gate", &gate});
}

AnonymousTable::AnonymousTable(std::vector<std::string> fields,
                               std::vector<Vocabulary> vocabularies, std::size_t d_a,
                               std::size_t d_v, Rng& rng)
    : fields_(std::move(fields)), vocabularies_(std::move(vocabularies)) {
  if (fields_.size() != vocabularies_.size()) {
    throw ConfigError("anonymous table: one vocabulary per field required");
  }
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    // An empty vocabulary still gets one row so the table has a valid shape;
    // it is never looked up.
    const std::size_t rows = std::max<std::size_t>(vocabularies_[k].size(), 1);
    embeddings.push_back(tracked({rows, d_a}));
    fill_normal(embeddings.back(), rng, 0.1);
    projections.push_back(tracked({d_a, d_v}));
    fill_normal(projections.back(), rng, 1.0 / std::sqrt(static_cast<double>(d_a)));
  }
}

const Vocabulary& AnonymousTable::vocabulary(std::size_t field) const {
  if (field >= fields_.size()) {
    throw std::out_of_range("anonymous table: field index " + std::to_string(field) +
                            " out of range (" + std::to_string(fields_.size()) + " fields)");
  }
  return vocabularies_[field];
}

std::int64_t AnonymousTable::lookup(std::size_t field, std::string_view id) const {
  return vocabulary(field).lookup(id);
}

Var AnonymousTable::fuse(Var z, std::span<const AnonymousIds> ids) {
  Tape& t = z.tape();
  Var out = z;
  for (const AnonymousIds& group : ids) {
    vocabulary(group.field);
    if (group.index.size() != z.value().rows()) {
      throw ShapeError("anonymous table: " + std::to_string(group.index.size()) +
                       " ids for a batch of " + std::to_string(z.value().rows()));
    }
    Var h = gather_rows(t.param(embeddings[group.field]), group.index);
    out = add(out, linear(h, t.param(projections[group.field]), Var()));
  }
  return out;
}

void AnonymousTable::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    out.push_back({prefix + fields_[k] + "/embedding", &embeddings[k]});
    out.push_back({prefix + fields_[k] + "/projection", &projections[k]});
  }
}

}  // namespace ufin
