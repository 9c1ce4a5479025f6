#include "stinpaint/tensor/param_store.hpp"

#include <cmath>

namespace stinpaint {

template <typename S>
void ParamStore<S>::add_parameter(const std::string& name, Tensor<S> value) {
  if (contains(name)) throw ContractError("duplicate parameter name: " + name);
  const Shape5 s = value.shape();
  entries_.emplace(name, Entry{std::move(value), Tensor<S>(s), Tensor<S>(s), true});
}

template <typename S>
void ParamStore<S>::add_buffer(const std::string& name, Tensor<S> value) {
  if (contains(name)) throw ContractError("duplicate buffer name: " + name);
  entries_.emplace(name, Entry{std::move(value), {}, {}, false});
}

template <typename S>
typename ParamStore<S>::Entry& ParamStore<S>::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

template <typename S>
const typename ParamStore<S>::Entry& ParamStore<S>::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

template <typename S>
Tensor<S>& ParamStore<S>::value(const std::string& name) {
  return entry(name).value;
}

template <typename S>
const Tensor<S>& ParamStore<S>::value(const std::string& name) const {
  return entry(name).value;
}

template <typename S>
std::vector<std::string> ParamStore<S>::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (e.trainable) out.push_back(k);
  return out;
}

template <typename S>
std::vector<std::string> ParamStore<S>::buffer_names() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (!e.trainable) out.push_back(k);
  return out;
}

template <typename S>
std::size_t ParamStore<S>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [k, e] : entries_)
    if (e.trainable) n += static_cast<std::size_t>(e.value.size());
  return n;
}

template <typename S>
BoundParams<S>::BoundParams(Tape<S>& tape, const ParamStore<S>& store, bool trainable) : tape_(&tape) {
  for (const auto& name : store.parameter_names())
    vars_[name] = trainable ? tape.variable(store.value(name)) : tape.constant(store.value(name));
}

template <typename S>
Var BoundParams<S>::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ContractError("parameter not bound: " + name);
  return it->second;
}

template <typename S>
std::map<std::string, Tensor<S>> BoundParams<S>::gradients() const {
  std::map<std::string, Tensor<S>> out;
  for (const auto& [name, v] : vars_) out.emplace(name, tape_->grad(v));
  return out;
}

template <typename S>
void adam_step(ParamStore<S>& params, const std::map<std::string, Tensor<S>>& grads, double lr,
               const AdamConfig& cfg) {
  const auto names = params.parameter_names();
  for (const auto& name : names) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("adam_step: missing gradient for " + name);
    if (!(it->second.shape() == params.value(name).shape()))
      throw ShapeError("adam_step: gradient shape mismatch for " + name);
  }
  const std::int64_t t = params.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (const auto& name : names) {
    auto& e = params.entry(name);
    const auto& g = grads.at(name).vec();
    auto& m = e.first_moment.vec();
    auto& v = e.second_moment.vec();
    auto& p = e.value.vec();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double gi = double(g[i]);
      const double mi = cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * gi * gi;
      m[i] = S(mi);
      v[i] = S(vi);
      p[i] = S(double(p[i]) - lr * (mi / c1) / (std::sqrt(vi / c2) + cfg.eps));
    }
  }
  params.set_step(t);
}

template class ParamStore<float>;
template class ParamStore<double>;
template class BoundParams<float>;
template class BoundParams<double>;
template void adam_step<float>(ParamStore<float>&, const std::map<std::string, Tensor<float>>&, double,
                               const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const std::map<std::string, Tensor<double>>&, double,
                                const AdamConfig&);

}  // namespace stinpaint
