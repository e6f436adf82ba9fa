#pragma once

// Engine-versus-oracle checks shared by the unit and acceptance suites.

#include <optional>
#include <string>

#include "ermcat/codec.hpp"
#include "ermcat/storage.hpp"
#include "ermcat/url.hpp"

namespace compare {

/// Runs the request through planner+executor and through the oracle.
/// Returns a description of the first disagreement, or nullopt.
std::optional<std::string> against_oracle(const ermcat::DataRequest& request, const ermcat::CatalogState& state);

/// Engine result or thrown error kind, for callers that need the rows.
ermcat::RowSet run_engine(const ermcat::DataRequest& request, const ermcat::CatalogState& state);

/// Pages through a sorted request with @after and the given page size,
/// re-parsing each page URL, and checks the concatenation equals the
/// unlimited result in order.
std::optional<std::string> paging_partition(const ermcat::DataRequest& request, const ermcat::CatalogState& state,
                                            std::uint64_t page_size);

bool same_sequence(const ermcat::RowSet& a, const ermcat::RowSet& b);

}  // namespace compare
