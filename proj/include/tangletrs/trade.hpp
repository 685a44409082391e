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

#include "tangletrs/core.hpp"
#include "tangletrs/tangle.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tangletrs {

//------------------------------------------------------------------------------
// Bundle protocol (UTXO payments)
//------------------------------------------------------------------------------

/// The all-zero identity. No key hashes to it, so outputs paying it are
/// provably unspendable.
inline NodeId burn_address()
{
  return NodeId{};
}

/// Derived, keyless address holding a trade's locked funds.
NodeId escrow_address(HashDigest const &session_id);

struct TxOutput
{
  NodeId owner;
  Money amount;
  /// When non-empty, any of these identities (and not `owner`) may spend.
  std::vector<NodeId> releasers;

  bool operator==(TxOutput const &) const = default;
};

struct Bundle
{
  std::vector<OutputRef> inputs;
  std::vector<TxOutput> outputs;
  std::uint64_t nonce{0};  ///< distinguishes otherwise identical bundles
  std::vector<Signature> signatures;  ///< one per input, over body_bytes()

  Bytes body_bytes() const;
  Bytes canonical_bytes() const;
  /// Digest of the body; signatures are excluded so the id is not malleable.
  HashDigest id() const;

  static Bundle decode(ByteView bytes);
};

enum class BundleFault : std::uint8_t
{
  Ok = 0,
  Malformed,
  InputUnknown,
  InputSpent,
  Unspendable,
  BadSignature,
  ValueOverdraw,
};

std::string_view to_string(BundleFault f);

struct BundleVerdict
{
  BundleFault fault{BundleFault::Ok};
  std::size_t index{0};  ///< offending input, where applicable

  bool ok() const { return fault == BundleFault::Ok; }
};

/// Ledger view of all applied bundles.
class UtxoSet
{
public:
  /// Creates an output out of thin air (initial endowment or coinbase).
  /// `tag` must be unique per call.
  OutputRef mint(NodeId const &owner, Money amount, HashDigest const &tag);

  BundleVerdict validate(Bundle const &bundle) const;
  /// Validates then applies; throws Error(InvalidArgument) on an invalid bundle.
  void apply(Bundle const &bundle);

  /// True for any output ever created, spent or not.
  bool contains(OutputRef const &ref) const { return archive_.contains(ref); }
  bool is_spent(OutputRef const &ref) const { return spent_.contains(ref); }
  std::optional<TxOutput> output(OutputRef const &ref) const;
  /// Bundle that consumed `ref`, if spent.
  std::optional<HashDigest> spent_by(OutputRef const &ref) const;
  /// Identity that funded the bundle's first input.
  std::optional<NodeId> payer(HashDigest const &bundle_id) const;
  bool has_bundle(HashDigest const &bundle_id) const { return payers_.contains(bundle_id); }

  Money balance(NodeId const &owner) const;
  /// Unspent outputs `who` may sign for, in a deterministic order.
  std::vector<std::pair<OutputRef, TxOutput>> spendable_by(NodeId const &who) const;

  Money minted() const { return minted_; }
  Money burned() const { return burned_; }
  Money fees() const { return fees_; }
  /// Σ unspent outputs excluding burn outputs.
  Money circulating() const { return circulating_; }

private:
  std::map<OutputRef, TxOutput> archive_;
  std::map<OutputRef, HashDigest> spent_;
  /// Unspent outputs indexed by every identity that may spend or owns them.
  std::map<NodeId, std::set<OutputRef>> holders_;
  std::map<HashDigest, NodeId> payers_;
  Money minted_{};
  Money burned_{};
  Money fees_{};
  Money circulating_{};
};

/// True iff `who` is allowed to spend `out`.
bool may_spend(TxOutput const &out, NodeId const &who);

/// Spends `who`'s outputs (lowest refs first) to cover `payments`, adding a
/// change output when needed. Throws Error(InsufficientFunds).
Bundle build_payment(KeyPair const &who, UtxoSet const &ledger, std::vector<TxOutput> payments,
                     std::uint64_t nonce);

/// Spends specific inputs; every input must be spendable by `signer`.
Bundle build_spend(KeyPair const &signer, std::vector<OutputRef> inputs,
                   std::vector<TxOutput> outputs, std::uint64_t nonce);

/// Draft of a Tangle message carrying `bundle`; the spends field mirrors the
/// bundle inputs so conflicting spends become visible to the Tangle.
MessageDraft bundle_draft(Bundle const &bundle);

//------------------------------------------------------------------------------
// Proof-of-Burn
//------------------------------------------------------------------------------

struct ProofOfBurn
{
  HashDigest bundle{};
  std::uint32_t output_index{0};
  Money amount;

  auto operator<=>(ProofOfBurn const &) const = default;
  OutputRef output() const { return {bundle, output_index}; }
};

void encode(Encoder &e, ProofOfBurn const &p);
ProofOfBurn decode_pob(Decoder &d);

/// Checks that the proof names an applied output paying the burn address,
/// that `owner` funded it and that it burns at least `floor`.
bool verify_pob(ProofOfBurn const &pob, UtxoSet const &ledger, NodeId const &owner, Money floor);

//------------------------------------------------------------------------------
// Initial protocol (onboarding)
//------------------------------------------------------------------------------

struct InitialMessage
{
  NodeId sender;
  std::string service_descriptor;
  std::string content_pointer;  ///< opaque content address
  std::optional<ProofOfBurn> pob;
  PowSolution pow;
  Signature signature;

  Bytes body_bytes() const;
  Bytes signed_bytes() const;
  Bytes canonical_bytes() const;

  static InitialMessage decode(ByteView bytes);
};

InitialMessage make_initial(KeyPair const &keys, std::string service, std::string pointer,
                            std::optional<ProofOfBurn> pob, unsigned pow_bits);

struct OnboardingPolicy
{
  unsigned pow_bits{8};
  Money burn_floor{1};
};

struct Registration
{
  NodeId id;
  std::string service_descriptor;
  std::string content_pointer;
  Money burned;
  unsigned pow_bits{0};
};

class Directory
{
public:
  explicit Directory(OnboardingPolicy policy = {})
    : policy_{policy}
  {}

  /// WeakOnboarding, DuplicateIdentity or BadSignature on rejection.
  Errc register_initial(InitialMessage const &msg, UtxoSet const &ledger);

  bool is_registered(NodeId const &id) const { return entries_.contains(id); }
  Registration const *find(NodeId const &id) const;
  std::vector<NodeId> providers(std::string const &service) const;
  std::size_t size() const { return entries_.size(); }

private:
  OnboardingPolicy policy_;
  std::map<NodeId, Registration> entries_;
  std::set<OutputRef> used_burns_;
};

//------------------------------------------------------------------------------
// Rep protocol (trade sessions and feedback)
//------------------------------------------------------------------------------

enum class TradeState : std::uint8_t
{
  Requested,
  Acked,
  MediatorProposed,
  MediatorChosen,
  FundsLocked,
  Delivered,
  Complained,
  MediatorReleased,
  BuyerReleased,
  Reviewed,
  Denied,
  Expired,
};

std::string_view to_string(TradeState s);

enum class TradeAction : std::uint8_t
{
  Request,
  Ack,
  Deny,
  ProposeMediators,
  ChooseMediator,
  LockFunds,
  Deliver,
  Release,
  Complain,
  MediatorDecide,
  Timeout,
  Review,  ///< recorded by TradeBook::submit_feedback
};

std::string_view to_string(TradeAction a);

struct TradeEvent
{
  HashDigest session{};  ///< zero for Request
  TradeAction action{TradeAction::Request};
  NodeId actor;
  std::uint64_t tick{0};
  NodeId counterparty;  ///< Request: the seller
  Money amount;  ///< Request: the price
  bool nofeedback{false};  ///< Ack / ProposeMediators
  std::vector<NodeId> mediators;  ///< Request (buyer list) / ProposeMediators (seller list)
  std::optional<NodeId> pick;  ///< ChooseMediator
  std::optional<HashDigest> bundle;  ///< LockFunds / Release / MediatorDecide / Timeout
  bool to_seller{true};  ///< MediatorDecide
  Signature signature;

  Bytes signed_bytes() const;
  Bytes canonical_bytes() const;
  static TradeEvent decode(ByteView bytes);
};

TradeEvent sign_event(KeyPair const &keys, TradeEvent ev);

/// Id of the session a Request event opens.
HashDigest session_id(TradeEvent const &request);

struct TransitionRecord
{
  std::uint64_t tick{0};
  TradeAction action{TradeAction::Request};
  NodeId actor;
  TradeState from{TradeState::Requested};
  TradeState to{TradeState::Requested};
};

struct TradeSession
{
  HashDigest id{};
  NodeId buyer;
  NodeId seller;
  std::optional<NodeId> mediator;
  Money price;
  TradeState state{TradeState::Requested};
  bool nofeedback{false};
  bool seller_acked{false};
  std::vector<NodeId> buyer_mediators;
  std::vector<NodeId> seller_mediators;
  std::optional<OutputRef> escrow;  ///< locked output
  std::optional<HashDigest> payment;  ///< bundle that disbursed the escrow
  std::optional<bool> paid_seller;
  std::uint64_t opened_tick{0};
  std::vector<TransitionRecord> log;

  bool uses_mediator() const { return !buyer_mediators.empty(); }
  bool released() const
  {
    return state == TradeState::BuyerReleased || state == TradeState::MediatorReleased;
  }
};

struct Feedback
{
  HashDigest trade{};
  NodeId rater;
  NodeId subject;
  std::uint32_t rating_milli{0};  ///< rating in thousandths, 0..1000
  std::optional<HashDigest> payment;
  Money amount;  ///< value of the coupled payment
  Signature signature;

  Bytes signed_bytes() const;
  Bytes canonical_bytes() const;
  HashDigest id() const { return sha3_512(canonical_bytes()); }
  double rating() const { return rating_milli / 1000.0; }

  static Feedback decode(ByteView bytes);
};

Feedback make_feedback(KeyPair const &rater, HashDigest trade, NodeId subject,
                       std::uint32_t rating_milli, std::optional<HashDigest> payment, Money amount);

struct TradePolicy
{
  std::uint64_t timeout_ticks{1000};
  /// When false, feedback is accepted without a coupled, seller-acknowledged
  /// and paid trade (the unprotected baseline).
  bool require_coupling{true};
};

/// Session registry plus the feedback it has admitted.
class TradeBook
{
public:
  explicit TradeBook(TradePolicy policy = {})
    : policy_{policy}
  {}

  TradePolicy const &policy() const { return policy_; }

  /// Opens a session from a signed Request event and returns its id.
  /// Throws Error on a malformed or unsigned request.
  HashDigest open(TradeEvent const &request);

  /// Applies one event. When `ledger` is given, fund movements named by the
  /// event are checked against it. On error the session is unchanged.
  Errc step(TradeEvent const &event, UtxoSet const *ledger = nullptr);

  /// Admission of a review. On success the owning session moves to Reviewed.
  Errc submit_feedback(Feedback const &fb);

  TradeSession const *find(HashDigest const &id) const;
  std::map<HashDigest, TradeSession> const &sessions() const { return sessions_; }
  std::vector<Feedback> const &feedback() const { return feedback_; }

private:
  TradePolicy policy_;
  std::map<HashDigest, TradeSession> sessions_;
  std::vector<Feedback> feedback_;
};

/// Pure transition function behind TradeBook::step.
Errc trade_step(TradeSession &session, TradeEvent const &event, TradePolicy const &policy,
                UtxoSet const *ledger = nullptr);

/// Bundle moving `price` from the buyer into the session's escrow.
Bundle build_lock(KeyPair const &buyer, UtxoSet const &ledger, TradeSession const &session,
                  std::uint64_t nonce);

/// Bundle disbursing the escrow to seller or buyer, signed by a releaser.
Bundle build_release(KeyPair const &releaser, TradeSession const &session, bool to_seller,
                     std::uint64_t nonce);

//------------------------------------------------------------------------------
// Tangle envelopes
//------------------------------------------------------------------------------

/// First payload byte of a Rep message.
enum class RepRecord : std::uint8_t
{
  Event = 0,
  Feedback = 1,
};

MessageDraft initial_draft(InitialMessage const &msg);
MessageDraft event_draft(TradeEvent const &event);
MessageDraft feedback_draft(Feedback const &fb);

std::optional<Bundle> carried_bundle(TangleMessage const &msg);
std::optional<InitialMessage> carried_initial(TangleMessage const &msg);
std::optional<TradeEvent> carried_event(TangleMessage const &msg);
std::optional<Feedback> carried_feedback(TangleMessage const &msg);

}  // namespace tangletrs
