#include "emdarts/ops/op_kind.hpp"

#include <string>

#include "emdarts/error.hpp"

namespace emdarts::ops {

namespace {
constexpr std::array<std::string_view, kNumLocalOps> kLocalNames = {
    "none", "skip_connect", "max_pool_3", "avg_pool_3", "sep_conv_3", "sep_conv_5", "dil_conv_3", "dil_conv_5"};
constexpr std::array<std::string_view, kNumGlobalOps> kGlobalNames = {"none", "skip_connect", "cell"};
}  // namespace

std::string_view op_name(LocalOpKind kind) { return kLocalNames[index_of(kind)]; }

std::string_view op_name(GlobalOpKind kind) { return kGlobalNames[index_of(kind)]; }

LocalOpKind parse_local_op(std::string_view name) {
  for (std::size_t i = 0; i < kNumLocalOps; ++i) {
    if (kLocalNames[i] == name) return kAllLocalOps[i];
  }
  throw FormatError("unknown local op '" + std::string(name) + "'");
}

GlobalOpKind parse_global_op(std::string_view name) {
  for (std::size_t i = 0; i < kNumGlobalOps; ++i) {
    if (kGlobalNames[i] == name) return kAllGlobalOps[i];
  }
  throw FormatError("unknown global op '" + std::string(name) + "'");
}

}  // namespace emdarts::ops
