#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "tenexp/tensor.hpp"

namespace tenexp {

struct CPFactors {
  std::vector<Matrix> factors;  // H_n: I_n x R
};

struct TuckerFactors {
  DenseTensor core;             // R_1 x ... x R_N
  std::vector<Matrix> factors;  // H_n: I_n x R_n
};

struct TTFactors {
  Matrix head;                     // I_1 x R_1
  std::vector<DenseTensor> cores;  // R_{n-1} x I_n x R_n, n = 2..N-1
  Matrix tail;                     // R_{N-1} x I_N
};

struct TRFactors {
  std::vector<DenseTensor> cores;  // R_n x I_n x R_{n+1}, cyclic
};

// Symmetric table of FCTN edge ranks R_{n1,n2}; modes are 0-based here.
class FctnRanks {
 public:
  FctnRanks() = default;
  FctnRanks(std::size_t order, std::size_t fill);

  std::size_t order() const noexcept { return order_; }
  std::size_t get(std::size_t a, std::size_t b) const;
  void set(std::size_t a, std::size_t b, std::size_t value);

  bool operator==(const FctnRanks&) const = default;

 private:
  std::size_t order_ = 0;
  std::vector<std::size_t> table_;
};

// Core n has shape (R_{0,n}, ..., R_{n-1,n}, I_n, R_{n,n+1}, ..., R_{n,N-1}).
struct FCTNFactors {
  std::vector<DenseTensor> cores;
  FctnRanks ranks;
};

struct TFFactors {
  DenseTensor a_hat;  // I_1 x R x l
  DenseTensor b_hat;  // R x I_2 x l
  Matrix transform;   // I_3 x l
};

enum class DecompositionKind { tucker, fctn, tf };

std::string to_string(DecompositionKind kind);
DecompositionKind parse_decomposition_kind(const std::string& name);

using CandidateFactors = std::variant<TuckerFactors, FCTNFactors, TFFactors>;

struct CandidateDecomposition {
  CandidateFactors factors;
  Shape target_shape;

  DecompositionKind kind() const;
};

void validate(const CPFactors& f);
void validate(const TuckerFactors& f);
void validate(const TTFactors& f);
void validate(const TRFactors& f);
void validate(const FCTNFactors& f);
void validate(const TFFactors& f);
void validate(const CandidateDecomposition& c);

Shape fctn_core_shape(const FctnRanks& ranks, const Shape& target, std::size_t n);

DenseTensor cp_compose(const CPFactors& f);
DenseTensor tucker_compose(const TuckerFactors& f);
DenseTensor tt_compose(const TTFactors& f);
DenseTensor tr_compose(const TRFactors& f);
DenseTensor fctn_compose(const FCTNFactors& f);
DenseTensor tf_compose(const TFFactors& f);
DenseTensor compose(const CandidateDecomposition& c);

// Contracts every FCTN core except `skip` (0-based) and returns the partial
// network with modes ordered as: physical modes m != skip ascending, then the
// edges (skip, m) for m != skip ascending.
DenseTensor fctn_contract_except(const FCTNFactors& f, std::size_t skip);

Shape fctn_target_shape(const FCTNFactors& f);

TuckerFactors embed_cp_in_tucker(const CPFactors& cp);
TRFactors embed_tt_in_tr(const TTFactors& tt);
FCTNFactors embed_tt_in_fctn(const TTFactors& tt);
FCTNFactors embed_tr_in_fctn(const TRFactors& tr);

using EmbeddingSource = std::variant<CPFactors, TTFactors, TRFactors>;
enum class EmbeddingTarget { tucker, tr, fctn };
using EmbeddedFactors = std::variant<TuckerFactors, TRFactors, FCTNFactors>;

EmbeddedFactors special_case_embedding(const EmbeddingSource& source, EmbeddingTarget target);

std::size_t param_count(const CandidateDecomposition& c);

}  // namespace tenexp
