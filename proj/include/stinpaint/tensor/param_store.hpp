#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stinpaint/tensor/tape.hpp"

namespace stinpaint {

/// Named trainable tensors and non-trainable buffers (e.g. batch-norm running
/// statistics) with per-parameter Adam moments. Iteration over names is in
/// lexicographic order, which fixes the update order.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    Tensor<Scalar> value;
    Tensor<Scalar> first_moment;
    Tensor<Scalar> second_moment;
    bool trainable = true;
  };

  void add_parameter(const std::string& name, Tensor<Scalar> value);
  void add_buffer(const std::string& name, Tensor<Scalar> value);

  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  Tensor<Scalar>& value(const std::string& name);
  const Tensor<Scalar>& value(const std::string& name) const;
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::vector<std::string> parameter_names() const;
  std::vector<std::string> buffer_names() const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t parameter_count() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

/// Parameter leaves registered on a tape for one forward pass.
template <typename Scalar>
class BoundParams {
 public:
  /// With `trainable == false` parameters enter the tape as constants, so
  /// nothing is kept for a backward pass.
  BoundParams(Tape<Scalar>& tape, const ParamStore<Scalar>& store, bool trainable = true);
  Var operator[](const std::string& name) const;
  /// Gradients by name after tape.backward(); every trainable parameter gets
  /// an entry (zeros when unused).
  std::map<std::string, Tensor<Scalar>> gradients() const;

 private:
  Tape<Scalar>* tape_;
  std::map<std::string, Var> vars_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam step over all trainable parameters in name order.
/// Throws ContractError when a trainable parameter has no gradient.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const std::map<std::string, Tensor<Scalar>>& grads, double lr,
               const AdamConfig& cfg = {});

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class BoundParams<float>;
extern template class BoundParams<double>;

}  // namespace stinpaint
