// Copyright 2026 The tangletrs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tangletrs/chain.hpp"
#include "tangletrs/reputation.hpp"
#include "tangletrs/tangle.hpp"
#include "tangletrs/trade.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tangletrs {

/// First line of every snapshot file.
inline constexpr std::string_view kSnapshotHeader = "# tangletrs ledger v1";

/// Tangle and chain rebuilt from a snapshot.
struct LedgerSnapshot
{
  TangleState tangle;
  ChainState chain;
};

/// Writes one record per line: "M <hex>" for every non-genesis message in
/// attachment order, then "B <hex>" for every non-genesis block in insertion
/// order. Lines starting with '#' are comments.
void write_snapshot(std::ostream &out, TangleState const &tangle, ChainState const &chain);
void save_snapshot(std::filesystem::path const &path, TangleState const &tangle,
                   ChainState const &chain);

/// Replays a snapshot through attach_message and ChainState::insert. Throws
/// Error(InvalidArgument) naming the first bad line.
LedgerSnapshot read_snapshot(std::istream &in, TangleConfig config = {});
/// As above; throws Error(IoFailure) if the file cannot be read.
LedgerSnapshot load_snapshot(std::filesystem::path const &path, TangleConfig config = {});

/// Human-readable summary: message counts by kind, digests, and one line per
/// block with height, dumb-ref count and fork membership.
void describe_ledger(std::ostream &out, LedgerSnapshot const &ledger);

/// Feedback records carried by the Tangle, in attachment order.
std::vector<Feedback> ledger_feedback(TangleState const &tangle);

/// Interaction graph built from the Tangle's feedback records.
InteractionGraph ledger_graph(TangleState const &tangle);

/// Replays every trade event (and the review, if any) of one session.
/// Returns nullopt if the session's request is not in the Tangle.
std::optional<TradeSession> replay_session(TangleState const &tangle, HashDigest const &session,
                                           TradePolicy policy = {});

/// Writes the transition log of `session`, one transition per line.
void write_trace(std::ostream &out, TradeSession const &session);

}  // namespace tangletrs
