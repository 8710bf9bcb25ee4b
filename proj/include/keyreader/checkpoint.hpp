#pragma once

#include <map>
#include <string>
#include <vector>

#include "keyreader/types.hpp"

namespace krd {

class ParamStore;

// Flat archive of named tensors. Layout:
//   magic "KRD1"
//   per entry: u32 name length, name bytes (UTF-8), u32 rank, u32 dims...,
//              then row-major little-endian f64 values.
// Entries run to end of file; names sort order is the write order so the
// same contents always produce the same bytes.
namespace checkpoint {

struct Entry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<Scalar> values;  // row-major

  Mat as_matrix() const;
  static Entry from_matrix(const std::string& name, const Mat& m);
};

void write_file(const std::string& path, const std::vector<Entry>& entries);
std::vector<Entry> read_file(const std::string& path);

// Saves every parameter (sorted by name) plus its optimizer accumulators
// ("__opt__.<name>.g2" / ".u2") and the given metadata scalars
// ("__meta__.<key>").
void save_model(const std::string& path, const ParamStore& store,
                const std::map<std::string, Scalar>& meta);

// Restores parameter values (+ accumulators when present) into an already
// constructed store. Validates that archive names and shapes match the
// store exactly; returns the metadata map.
std::map<std::string, Scalar> load_model(const std::string& path, ParamStore& store);

}  // namespace checkpoint
}  // namespace krd
