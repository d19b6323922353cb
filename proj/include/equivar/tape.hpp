#pragma once

// Straight-line evaluation program compiled from one or more expressions.
// Structurally equal subexpressions are computed once, which matters for
// the heavily shared trees produced by repeated differentiation.

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "equivar/expr.hpp"

namespace equivar {

class Tape {
 public:
  Tape() = default;

  /// `inputs` fixes the slot order of variables; any other variable is unbound.
  Tape(std::span<const Expr> outputs, std::vector<std::string> inputs) : inputs_(std::move(inputs)) {
    for (std::size_t i = 0; i < inputs_.size(); ++i) slot_of_input_.emplace(inputs_[i], i);
    for (const auto& e : outputs) outputs_.push_back(emit(e));
    slot_of_input_.clear();
    seen_.clear();
  }

  Tape(const Expr& output, std::vector<std::string> inputs)
      : Tape(std::span<const Expr>(&output, 1), std::move(inputs)) {}

  const std::vector<std::string>& inputs() const noexcept { return inputs_; }
  std::size_t output_count() const noexcept { return outputs_.size(); }
  std::size_t size() const noexcept { return code_.size(); }

  /// Evaluates every output. `scratch` is resized as needed; reuse it across calls.
  void run(std::span<const double> in, std::span<double> out, std::vector<double>& scratch) const {
    scratch.resize(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
      const Instr& c = code_[k];
      double r = 0.0;
      switch (c.op) {
        case Op::Constant:
          r = c.value;
          break;
        case Op::Variable:
          r = in[c.first];
          break;
        case Op::Add:
          for (std::size_t j = 0; j < c.count; ++j) r += scratch[operands_[c.first + j]];
          r = detail::checked(r, "addition");
          break;
        case Op::Mul:
          r = 1.0;
          for (std::size_t j = 0; j < c.count; ++j) r *= scratch[operands_[c.first + j]];
          r = detail::checked(r, "multiplication");
          break;
        case Op::Div:
          r = detail::apply_div(scratch[operands_[c.first]], scratch[operands_[c.first + 1]]);
          break;
        case Op::Pow:
          r = detail::apply_pow(scratch[operands_[c.first]], scratch[operands_[c.first + 1]]);
          break;
        default:
          r = detail::apply_unary(c.op, scratch[operands_[c.first]]);
          break;
      }
      scratch[k] = r;
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = scratch[outputs_[i]];
  }

  std::vector<double> operator()(std::span<const double> in) const {
    std::vector<double> out(outputs_.size()), scratch;
    run(in, out, scratch);
    return out;
  }

  double scalar(std::span<const double> in) const { return (*this)(in).at(0); }

 private:
  struct Instr {
    Op op;
    double value = 0.0;
    std::size_t first = 0;  // operand offset, or input slot for Variable
    std::size_t count = 0;
  };

  std::size_t emit(const Expr& e) {
    auto& bucket = seen_[e.hash()];
    for (const auto& [expr, slot] : bucket)
      if (expr == e) return slot;
    Instr ins{e.op()};
    if (e.is_constant()) {
      ins.value = e.value();
    } else if (e.is_variable()) {
      auto it = slot_of_input_.find(e.name());
      if (it == slot_of_input_.end()) throw UnboundVariable(e.name());
      ins.first = it->second;
    } else {
      std::vector<std::size_t> ops;
      for (const auto& a : e.args()) ops.push_back(emit(a));
      ins.first = operands_.size();
      ins.count = ops.size();
      operands_.insert(operands_.end(), ops.begin(), ops.end());
    }
    code_.push_back(ins);
    std::size_t slot = code_.size() - 1;
    seen_[e.hash()].emplace_back(e, slot);
    return slot;
  }

  std::vector<std::string> inputs_;
  std::vector<Instr> code_;
  std::vector<std::size_t> operands_;
  std::vector<std::size_t> outputs_;
  std::unordered_map<std::string, std::size_t> slot_of_input_;
  std::unordered_map<std::size_t, std::vector<std::pair<Expr, std::size_t>>> seen_;
};

}  // namespace equivar
