#include <cstdlib>
#include <string_view>

#include "otpw/kernels.hpp"

namespace otpw::kernels {

const KernelTable& active() {
  static const KernelTable& table = [] () -> const KernelTable& {
    if (const char* env = std::getenv("OTPW_KERNELS"); env && std::string_view(env) == "scalar") {
      return scalar_table();
    }
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return table;
}

}  // namespace otpw::kernels
