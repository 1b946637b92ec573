#include "stsae/rng.hpp"

#include "stsae/error.hpp"

#include <locale>
#include <sstream>

namespace stsae {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string Rng::save() const {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << engine_ << ' ' << normal_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in.imbue(std::locale::classic());
  in >> engine_ >> normal_;
  if (!in) fail(ErrorCode::ParseError, "corrupt random number generator state");
}

}  // namespace stsae
