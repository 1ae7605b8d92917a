#pragma once

#include <iosfwd>
#include <string>

#include "bbi/kernel.hpp"

namespace bbi {

struct ProofFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string proof_to_json(const Derivation& d, int indent = 2);
Derivation proof_from_json(const std::string& text);

void write_proof_file(const std::string& path, const Derivation& d);
Derivation read_proof_file(const std::string& path);

}  // namespace bbi
