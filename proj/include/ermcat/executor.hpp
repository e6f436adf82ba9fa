#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ermcat/codec.hpp"
#include "ermcat/planner.hpp"
#include "ermcat/storage.hpp"

namespace ermcat {

/// Evaluates a retrieval plan against one snapshot. `row_cap` bounds the
/// result like a server-imposed limit.
RowSet execute(const CatalogState& state, const QueryPlan& plan, std::optional<std::uint64_t> row_cap = {});

/// Distinct, non-null target rows selected by the plan's path and filters, in
/// RowId order. Ordering and paging are ignored.
std::vector<RowId> select_target_rows(const CatalogState& state, const QueryPlan& plan);

struct MutationResult {
  std::size_t affected = 0;
  RowSet rows;  // inserted/updated rows; empty for deletes and clears
};

/// Applies a mutation inside a write txn and checks the constraints of the
/// target table at statement end. `input` columns are named by the plan's
/// input bindings.
MutationResult mutate(Txn& txn, const MutationPlan& plan, const RowSet& input);

}  // namespace ermcat
