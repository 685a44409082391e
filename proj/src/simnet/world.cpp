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

#include "internal.hpp"

#include "tangletrs/ledger.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace tangletrs::sim {

namespace {

constexpr std::uint64_t kForgedAmountFactor = 50;

enum class Cohort : std::uint8_t
{
  Honest,
  Malicious,
  Whitewash,
  Sybil,
  Miner,
  Device,
};

std::string_view cohort_name(Cohort c)
{
  switch (c)
  {
  case Cohort::Honest: return "honest";
  case Cohort::Malicious: return "malicious";
  case Cohort::Whitewash: return "whitewash";
  case Cohort::Sybil: return "sybil";
  case Cohort::Miner: return "miner";
  case Cohort::Device: return "device";
  }
  return "unknown";
}

struct Identity
{
  MessageAuthor author;
  Cohort cohort{Cohort::Honest};
  std::uint64_t bundle_nonce{0};

  KeyPair const &keys() const { return author.keys; }
  NodeId const &id() const { return author.id(); }
};

struct TradeRun
{
  std::optional<HashDigest> session;
  Errc review{Errc::InvalidArgument};
};

struct SybilPair
{
  std::size_t first{0};
  std::size_t second{0};
};

struct Admission
{
  std::uint64_t admitted{0};
  std::uint64_t rejected{0};
};

class World
{
public:
  explicit World(SimConfig const &config);

  void run();
  ScenarioResult finish();

private:
  using Admit = std::function<Errc()>;

  // Admission pipeline shared by every actor.
  Errc submit(Cohort cohort, TangleMessage const &msg, Admit const &admit);
  Errc publish(std::size_t who, MessageDraft draft, Admit const &admit = {},
               TangleMessage *out = nullptr);
  Errc publish_bundle(std::size_t who, Bundle const &bundle);
  Errc send_event(std::size_t who, TradeEvent ev);
  Errc send_feedback(std::size_t who, Feedback const &fb, TangleMessage *out = nullptr);
  void broadcast_request(Cohort cohort, WeakReqRequest const &req);

  std::size_t add_identity(KeyPair keys, Cohort cohort);
  Errc onboard(std::size_t who, bool mint_endowment);

  TradeRun trade(std::size_t buyer, std::size_t seller, std::uint32_t rating, bool mediated,
                 bool complain, bool may_opt_out);
  std::vector<NodeId> pick_mediators(std::size_t buyer, std::size_t seller);
  double average_of(NodeId const &subject) const;

  void chain_step();
  void device_step();
  void honest_step();
  void attack_step();
  void attack(AttackKind kind, std::size_t actor, std::uint64_t attempt);
  std::size_t colluder_for(std::size_t actor);
  std::uint32_t honest_rating(std::size_t seller);

  void evaluate(MetricsReport &report);

  SimConfig cfg_;
  Rng trade_rng_;
  Rng attack_rng_;
  Rng tip_rng_;
  Rng chain_rng_;
  Rng eval_rng_;

  TangleState tangle_;
  UtxoSet ledger_;
  Directory directory_;
  TradeBook book_;
  ChainState chain_;
  std::uint64_t now_{0};

  std::vector<Identity> ids_;
  std::vector<std::size_t> honest_;
  std::vector<std::size_t> malicious_;
  std::vector<std::size_t> sellers_;
  std::vector<std::size_t> evaluators_;
  std::map<AttackKind, std::vector<std::size_t>> groups_;

  std::vector<MinerState> miners_;
  std::vector<WeakReqService> services_;
  std::vector<WeakDevice> devices_;
  std::vector<MessageAuthor> device_authors_;
  std::map<NodeId, WeakReqRequest> mempool_;

  /// Per subject, per rater: (sum of ratings, count), for trade gating.
  std::map<NodeId, std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>>> ratings_;
  std::vector<HashDigest> feedback_msgs_;
  std::vector<SybilPair> sybils_;
  /// Onboarding burns of honest nodes.
  std::vector<ProofOfBurn> burns_;
  std::uint64_t forged_{0};

  std::map<std::string, Admission> admission_;
  std::map<AttackKind, AttackOutcome> attacks_;
  std::map<std::string, double> metrics_;
  std::vector<double> liveness_balance_;
};

World::World(SimConfig const &config)
  : cfg_{config}
  , trade_rng_{make_rng(config.seed, kTradeStream)}
  , attack_rng_{make_rng(config.seed, kAttackStream)}
  , tip_rng_{make_rng(config.seed, kTipStream)}
  , chain_rng_{make_rng(config.seed, kChainStream)}
  , eval_rng_{make_rng(config.seed, kEvalStream)}
  , tangle_{TangleConfig{config.tangle_pow_bits}}
  , directory_{config.onboarding}
  , book_{TradePolicy{config.trade.timeout_ticks, config.protections}}
{
  for (std::uint32_t i = 0; i < cfg_.n_honest; ++i)
  {
    honest_.push_back(add_identity(KeyPair::derive("sim/honest", cfg_.seed, i), Cohort::Honest));
  }
  for (std::uint32_t i = 0; i < cfg_.n_malicious; ++i)
  {
    malicious_.push_back(
      add_identity(KeyPair::derive("sim/malicious", cfg_.seed, i), Cohort::Malicious));
  }
  for (auto idx : honest_)
  {
    onboard(idx, true);
  }
  for (auto idx : malicious_)
  {
    onboard(idx, true);
  }
  sellers_ = honest_;
  sellers_.insert(sellers_.end(), malicious_.begin(), malicious_.end());

  // Evaluators: a seeded sample of honest nodes.
  std::vector<std::size_t> pool = honest_;
  for (std::uint32_t i = 0; i < cfg_.n_evaluators && i < pool.size(); ++i)
  {
    auto j = i + uniform_index(eval_rng_, pool.size() - i);
    std::swap(pool[i], pool[j]);
    evaluators_.push_back(pool[i]);
  }

  // Malicious subgroups: the cohort is split evenly over the configured kinds.
  std::vector<AttackKind> kinds;
  for (auto const &[kind, count] : cfg_.attack_mix)
  {
    if (count > 0 && !malicious_.empty())
    {
      kinds.push_back(kind);
      attacks_[kind] = {};
    }
  }
  for (std::size_t i = 0; i < malicious_.size() && !kinds.empty(); ++i)
  {
    groups_[kinds[i % kinds.size()]].push_back(malicious_[i]);
  }

  for (std::uint32_t i = 0; i < cfg_.n_miners; ++i)
  {
    miners_.push_back(MinerState{MessageAuthor{KeyPair::derive("sim/miner", cfg_.seed, i)}, {}});
    services_.emplace_back(cfg_.weakreq_policy);
  }
  for (std::uint32_t i = 0; i < cfg_.n_devices; ++i)
  {
    auto keys = KeyPair::derive("sim/device", cfg_.seed, i);
    ledger_.mint(keys.id(), cfg_.endowment, sha3_512({as_bytes("sim/endowment"), keys.id().value.view()}));
    MessageAuthor author{keys};
    auto pob = create_pob(keys, ledger_, cfg_.weakreq.burn, 1);
    MessageDraft draft = bundle_draft(pob.bundle);
    draft.parents = tangle_.select_tips(tip_rng_);
    draft.timestamp = now_;
    auto msg = author.emit(std::move(draft), cfg_.tangle_pow_bits);
    if (submit(Cohort::Device, msg, [&] {
          return ledger_.validate(pob.bundle).ok() ? Errc::Ok : Errc::InvalidArgument;
        }) == Errc::Ok)
    {
      ledger_.apply(pob.bundle);
    }
    device_authors_.push_back(std::move(author));
    devices_.emplace_back(keys, cfg_.weakreq, cfg_.escalation, pob.pob);
  }
}

std::size_t World::add_identity(KeyPair keys, Cohort cohort)
{
  ids_.push_back(Identity{MessageAuthor{std::move(keys)}, cohort, 0});
  return ids_.size() - 1;
}

//------------------------------------------------------------------------------
// Admission pipeline
//------------------------------------------------------------------------------

Errc World::submit(Cohort cohort, TangleMessage const &msg, Admit const &admit)
{
  auto const rc = tangle_.admit(msg, admit);
  auto &counter = admission_[std::string{cohort_name(cohort)}];
  ++(rc == Errc::Ok ? counter.admitted : counter.rejected);
  return rc;
}

Errc World::publish(std::size_t who, MessageDraft draft, Admit const &admit, TangleMessage *out)
{
  draft.parents = tangle_.select_tips(tip_rng_);
  draft.timestamp = now_;
  auto msg = ids_[who].author.emit(std::move(draft), cfg_.tangle_pow_bits);
  if (out)
  {
    *out = msg;
  }
  return submit(ids_[who].cohort, msg, admit);
}

Errc World::publish_bundle(std::size_t who, Bundle const &bundle)
{
  auto rc = publish(who, bundle_draft(bundle), [&] {
    return ledger_.validate(bundle).ok() ? Errc::Ok : Errc::InvalidArgument;
  });
  if (rc == Errc::Ok)
  {
    ledger_.apply(bundle);
  }
  return rc;
}

Errc World::send_event(std::size_t who, TradeEvent ev)
{
  ev.actor = ids_[who].id();
  ev.tick = now_;
  ev = sign_event(ids_[who].keys(), std::move(ev));
  if (ev.action == TradeAction::Request)
  {
    return publish(who, event_draft(ev), [&] {
      try
      {
        book_.open(ev);
        return Errc::Ok;
      }
      catch (Error const &e)
      {
        return e.code();
      }
    });
  }
  return publish(who, event_draft(ev), [&] { return book_.step(ev, &ledger_); });
}

Errc World::send_feedback(std::size_t who, Feedback const &fb, TangleMessage *out)
{
  TangleMessage msg;
  auto rc = publish(who, feedback_draft(fb), [&] { return book_.submit_feedback(fb); }, &msg);
  if (rc == Errc::Ok)
  {
    auto &slot = ratings_[fb.subject][fb.rater];
    slot.first += fb.rating_milli;
    slot.second += 1;
    feedback_msgs_.push_back(msg.id());
  }
  if (out)
  {
    *out = std::move(msg);
  }
  return rc;
}

void World::broadcast_request(Cohort cohort, WeakReqRequest const &req)
{
  auto const fault = check_request(req, ledger_, cfg_.weakreq_policy);
  auto &counter = admission_[std::string{cohort_name(cohort)} + "_weakreq"];
  if (fault == RequestFault::Ok)
  {
    mempool_[req.sender] = req;
    ++counter.admitted;
  }
  else
  {
    ++counter.rejected;
  }
}

Errc World::onboard(std::size_t who, bool mint_endowment)
{
  auto const &id = ids_[who].id();
  if (mint_endowment)
  {
    ledger_.mint(id, cfg_.endowment, sha3_512({as_bytes("sim/endowment"), id.value.view()}));
  }
  auto pob = create_pob(ids_[who].keys(), ledger_, cfg_.onboarding.burn_floor,
                        ++ids_[who].bundle_nonce);
  if (auto rc = publish_bundle(who, pob.bundle); rc != Errc::Ok)
  {
    return rc;
  }
  if (ids_[who].cohort == Cohort::Honest)
  {
    burns_.push_back(pob.pob);
  }
  auto initial = make_initial(ids_[who].keys(), "market/goods", "content:" + id.short_hex(),
                              pob.pob, cfg_.onboarding.pow_bits);
  return publish(who, initial_draft(initial),
                 [&] { return directory_.register_initial(initial, ledger_); });
}

//------------------------------------------------------------------------------
// Trading
//------------------------------------------------------------------------------

std::vector<NodeId> World::pick_mediators(std::size_t buyer, std::size_t seller)
{
  std::vector<NodeId> out;
  for (int guard = 0; out.size() < 3 && guard < 32; ++guard)
  {
    auto m = honest_[uniform_index(trade_rng_, honest_.size())];
    auto const &id = ids_[m].id();
    if (m != buyer && m != seller && std::find(out.begin(), out.end(), id) == out.end())
    {
      out.push_back(id);
    }
  }
  return out;
}

TradeRun World::trade(std::size_t buyer, std::size_t seller, std::uint32_t rating, bool mediated,
                      bool complain, bool may_opt_out)
{
  TradeRun run;
  auto const price = cfg_.price;
  if (ledger_.balance(ids_[buyer].id()) < price)
  {
    return run;
  }

  TradeEvent req;
  req.action = TradeAction::Request;
  req.counterparty = ids_[seller].id();
  req.amount = price;
  if (mediated)
  {
    req.mediators = pick_mediators(buyer, seller);
    mediated = !req.mediators.empty();
  }
  req.actor = ids_[buyer].id();
  req.tick = now_;
  auto const sid = session_id(sign_event(ids_[buyer].keys(), req));
  if (send_event(buyer, req) != Errc::Ok)
  {
    return run;
  }
  run.session = sid;
  ++metrics_["trades_opened"];

  bool const opt_out = may_opt_out && bernoulli(trade_rng_, cfg_.nofeedback_rate);
  TradeEvent reply;
  reply.session = sid;
  reply.nofeedback = opt_out;
  if (mediated)
  {
    reply.action = TradeAction::ProposeMediators;
    reply.mediators = {req.mediators.front()};
  }
  else
  {
    reply.action = TradeAction::Ack;
  }
  if (send_event(seller, reply) != Errc::Ok)
  {
    return run;
  }
  std::size_t mediator = 0;
  if (mediated)
  {
    TradeEvent choose;
    choose.session = sid;
    choose.action = TradeAction::ChooseMediator;
    choose.pick = req.mediators.front();
    if (send_event(buyer, choose) != Errc::Ok)
    {
      return run;
    }
    for (auto h : honest_)
    {
      if (ids_[h].id() == *choose.pick)
      {
        mediator = h;
        break;
      }
    }
  }

  auto lock = build_lock(ids_[buyer].keys(), ledger_, *book_.find(sid), ++ids_[buyer].bundle_nonce);
  if (publish_bundle(buyer, lock) != Errc::Ok)
  {
    return run;
  }
  TradeEvent locked;
  locked.session = sid;
  locked.action = TradeAction::LockFunds;
  locked.bundle = lock.id();
  if (send_event(buyer, locked) != Errc::Ok)
  {
    return run;
  }
  TradeEvent deliver;
  deliver.session = sid;
  deliver.action = TradeAction::Deliver;
  if (send_event(seller, deliver) != Errc::Ok)
  {
    return run;
  }

  if (mediated && complain)
  {
    TradeEvent grievance;
    grievance.session = sid;
    grievance.action = TradeAction::Complain;
    if (send_event(buyer, grievance) != Errc::Ok)
    {
      return run;
    }
    auto refund = build_release(ids_[mediator].keys(), *book_.find(sid), false,
                                ++ids_[mediator].bundle_nonce);
    if (publish_bundle(mediator, refund) != Errc::Ok)
    {
      return run;
    }
    TradeEvent decide;
    decide.session = sid;
    decide.action = TradeAction::MediatorDecide;
    decide.bundle = refund.id();
    decide.to_seller = false;
    if (send_event(mediator, decide) != Errc::Ok)
    {
      return run;
    }
    ++metrics_["trades_refunded"];
  }
  else
  {
    auto pay = build_release(ids_[buyer].keys(), *book_.find(sid), true, ++ids_[buyer].bundle_nonce);
    if (publish_bundle(buyer, pay) != Errc::Ok)
    {
      return run;
    }
    TradeEvent release;
    release.session = sid;
    release.action = TradeAction::Release;
    release.bundle = pay.id();
    if (send_event(buyer, release) != Errc::Ok)
    {
      return run;
    }
  }

  auto const &session = *book_.find(sid);
  if (session.nofeedback)
  {
    ++metrics_["trades_nofeedback"];
    return run;
  }
  auto fb = make_feedback(ids_[buyer].keys(), sid, ids_[seller].id(), rating, session.payment, price);
  run.review = send_feedback(buyer, fb);
  return run;
}

double World::average_of(NodeId const &subject) const
{
  auto it = ratings_.find(subject);
  if (it == ratings_.end() || it->second.empty())
  {
    return 0.0;
  }
  double total = 0.0;
  for (auto const &[rater, slot] : it->second)
  {
    total += static_cast<double>(slot.first) / static_cast<double>(slot.second) / 1000.0;
  }
  return total / static_cast<double>(it->second.size());
}

std::uint32_t World::honest_rating(std::size_t seller)
{
  bool const good = ids_[seller].cohort == Cohort::Honest;
  auto const base = good ? 700u : 0u;
  return base + static_cast<std::uint32_t>(uniform_index(trade_rng_, 301));
}

void World::honest_step()
{
  bool const warm = now_ <= cfg_.warmup_ticks;
  for (auto buyer : honest_)
  {
    if (!bernoulli(trade_rng_, cfg_.trade_rate))
    {
      continue;
    }
    auto seller = sellers_[uniform_index(trade_rng_, sellers_.size())];
    if (seller == buyer)
    {
      continue;
    }
    if (!warm && average_of(ids_[seller].id()) <= cfg_.trust_threshold &&
        !bernoulli(trade_rng_, cfg_.exploration))
    {
      ++metrics_["trades_declined"];
      continue;
    }
    bool const mediated = bernoulli(trade_rng_, cfg_.mediator_rate);
    bool const scam = ids_[seller].cohort != Cohort::Honest;
    trade(buyer, seller, honest_rating(seller), mediated, scam, ids_[seller].cohort == Cohort::Honest);
  }
}

//------------------------------------------------------------------------------
// Miners and weak devices
//------------------------------------------------------------------------------

void World::device_step()
{
  for (auto &device : devices_)
  {
    if (device.state() == DeviceState::Idle)
    {
      broadcast_request(Cohort::Device, device.start(now_));
      ++metrics_["weakreq_broadcasts"];
    }
    else if (device.state() == DeviceState::Waiting)
    {
      if (auto again = device.on_tick(now_))
      {
        broadcast_request(Cohort::Device, *again);
        ++metrics_["weakreq_broadcasts"];
      }
      else if (device.state() == DeviceState::Abandoned)
      {
        mempool_.erase(device.id());
      }
    }
  }
}

void World::chain_step()
{
  if (miners_.empty())
  {
    return;
  }
  auto const w = uniform_index(chain_rng_, miners_.size());
  MiningJob job;
  job.parent = chain_.fork_choice();
  job.timestamp = now_;
  for (auto const &[sender, req] : mempool_)
  {
    job.mempool.push_back(req);
  }
  job.min_share = cfg_.weakreq_policy.min_share;
  job.validation = ValidationContext{&ledger_, cfg_.weakreq_policy};
  auto outcome = mine_block(miners_[w], tangle_, chain_, cfg_.chain, chain_rng_, job);
  admission_["miner"].admitted += outcome.minted.size();
  if (!outcome.block)
  {
    return;
  }
  auto const &block = *outcome.block;
  auto verdict = validate_block(block, tangle_, chain_, cfg_.chain, job.validation);
  if (!verdict.ok())
  {
    throw Error(Errc::InvalidArgument, "mined block rejected: " + std::string{to_string(verdict.fault)});
  }
  chain_.insert(block, tangle_);
  ledger_.mint(block.miner, block.coinbase, block.header_hash);
  ++metrics_["blocks"];

  auto const miner_id = miners_[w].author.id();
  for (auto const &req : block.weakreq_reqs)
  {
    services_[w].on_anchored(req);
    mempool_.erase(req.sender);
    ++metrics_["weakreq_anchored"];
    for (std::size_t d = 0; d < devices_.size(); ++d)
    {
      auto &device = devices_[d];
      if (device.id() != req.sender)
      {
        continue;
      }
      if (device.on_anchored(req.id(), miner_id) != Errc::Ok)
      {
        ++metrics_["weakreq_stale_notices"];
        continue;
      }
      for (std::uint32_t i = 1; i <= device.n_msg(); ++i)
      {
        Encoder payload;
        payload.u64(now_).u32(static_cast<std::uint32_t>(d)).u32(i);
        auto msg = device.make_message(i, payload.take(), ledger_);
        auto served =
          services_[w].serve(miners_[w].author, msg, ledger_, tangle_, tip_rng_, now_, cfg_.tangle_pow_bits);
        if (served.fault == ServeFault::Ok)
        {
          device.on_ack(i);
          ++metrics_["weakreq_served"];
          ++admission_["miner"].admitted;
        }
      }
    }
  }
}

//------------------------------------------------------------------------------
// Attack scripts
//------------------------------------------------------------------------------

std::size_t World::colluder_for(std::size_t actor)
{
  if (malicious_.size() < 2)
  {
    return actor;
  }
  for (;;)
  {
    auto c = malicious_[uniform_index(attack_rng_, malicious_.size())];
    if (c != actor)
    {
      return c;
    }
  }
}

void World::attack_step()
{
  auto const d = cfg_.duration_ticks;
  for (auto const &[kind, members] : groups_)
  {
    auto const count = cfg_.attack_mix.at(kind);
    auto const due = now_ * count / d - (now_ - 1) * count / d;
    for (std::uint64_t k = 0; k < due; ++k)
    {
      auto const attempt = attacks_[kind].attempts++;
      auto actor = members[uniform_index(attack_rng_, members.size())];
      try
      {
        attack(kind, actor, attempt);
      }
      catch (Error const &e)
      {
        // Funding shortfalls and similar are failed attempts, not simulator errors.
        ++metrics_["attack_aborted"];
      }
    }
  }
}

void World::attack(AttackKind kind, std::size_t actor, std::uint64_t attempt)
{
  auto &outcome = attacks_[kind];
  auto const price = cfg_.price;
  auto forged_session = [&] {
    Encoder e;
    e.str("sim/forged").u64(cfg_.seed).u64(++forged_);
    return sha3_512(e.take());
  };

  switch (kind)
  {
  case AttackKind::SelfPromoting: {
    // Cheap route first: a review for a trade that never happened.
    auto c = colluder_for(actor);
    // Nothing ties an uncoupled review to a payment, so it claims a large trade.
    auto fb = make_feedback(ids_[c].keys(), forged_session(), ids_[actor].id(), 1000, std::nullopt,
                            price.times(kForgedAmountFactor));
    if (send_feedback(c, fb) == Errc::Ok)
    {
      ++outcome.successes;
      return;
    }
    // Fallback: a real, paid collusion trade.
    if (trade(c, actor, 1000, false, false, false).review == Errc::Ok)
    {
      ++metrics_["self_promoting_paid_reviews"];
    }
    return;
  }

  case AttackKind::BallotStuffing: {
    auto c = colluder_for(actor);
    auto run = trade(actor, c, 1000, false, false, false);
    if (!run.session)
    {
      return;
    }
    auto const *session = book_.find(*run.session);
    auto extra = make_feedback(ids_[actor].keys(), *run.session, ids_[c].id(), 1000,
                               session->payment, price);
    if (send_feedback(actor, extra) == Errc::Ok)
    {
      ++outcome.successes;
    }
    return;
  }

  case AttackKind::Slandering: {
    auto target = honest_[uniform_index(attack_rng_, honest_.size())];
    auto fb = make_feedback(ids_[actor].keys(), forged_session(), ids_[target].id(), 0, std::nullopt, price);
    auto rc = send_feedback(actor, fb);
    if (rc == Errc::Ok)
    {
      ++outcome.successes;
    }
    else if (rc == Errc::SellerNeverAcked)
    {
      ++metrics_["slandering_rejected_unacked"];
    }
    return;
  }

  case AttackKind::Whitewashing: {
    auto fresh = add_identity(KeyPair::derive("sim/whitewash", cfg_.seed, attempt), Cohort::Whitewash);
    auto funding = cfg_.onboarding.burn_floor + price.times(5);
    auto pay = build_payment(ids_[actor].keys(), ledger_, {TxOutput{ids_[fresh].id(), funding, {}}},
                             ++ids_[actor].bundle_nonce);
    if (publish_bundle(actor, pay) != Errc::Ok || onboard(fresh, false) != Errc::Ok)
    {
      return;
    }
    malicious_.push_back(fresh);
    sellers_.push_back(fresh);
    // Reputation right after registration, under both aggregators.
    auto const avg = average_of(ids_[fresh].id());
    double flow = 0.0;
    if (!evaluators_.empty())
    {
      auto graph = InteractionGraph::from_feedback(book_.feedback());
      graph.add_vertex(ids_[fresh].id());
      flow = netflow_score(graph, ids_[evaluators_.front()].id(), ids_[fresh].id());
    }
    metrics_["whitewashing_max_start_average"] =
      std::max(metrics_["whitewashing_max_start_average"], avg);
    metrics_["whitewashing_max_start_netflow"] =
      std::max(metrics_["whitewashing_max_start_netflow"], flow);
    if (avg > 0.0 || flow > 0.0)
    {
      ++outcome.successes;
    }
    return;
  }

  case AttackKind::Sybil: {
    std::array<std::size_t, 2> fakes{};
    for (std::size_t i = 0; i < 2; ++i)
    {
      fakes[i] = add_identity(KeyPair::derive("sim/sybil", cfg_.seed, 2 * attempt + i), Cohort::Sybil);
      auto funding = cfg_.onboarding.burn_floor + price.times(3);
      auto pay = build_payment(ids_[actor].keys(), ledger_, {TxOutput{ids_[fakes[i]].id(), funding, {}}},
                               ++ids_[actor].bundle_nonce);
      if (publish_bundle(actor, pay) != Errc::Ok || onboard(fakes[i], false) != Errc::Ok)
      {
        return;
      }
    }
    trade(fakes[0], fakes[1], 1000, false, false, false);
    trade(fakes[1], fakes[0], 1000, false, false, false);
    sybils_.push_back({fakes[0], fakes[1]});
    return;
  }

  case AttackKind::Replay: {
    if (feedback_msgs_.empty())
    {
      return;
    }
    // Prefer a captured review that flatters a colluder.
    std::vector<HashDigest> flattering;
    for (auto const &id : feedback_msgs_)
    {
      auto fb = carried_feedback(tangle_.message(id));
      if (fb && fb->rating_milli >= 500 && ids_[actor].cohort == Cohort::Malicious &&
          std::any_of(malicious_.begin(), malicious_.end(),
                      [&](std::size_t m) { return ids_[m].id() == fb->subject; }))
      {
        flattering.push_back(id);
      }
    }
    auto const &pool = flattering.empty() ? feedback_msgs_ : flattering;
    auto captured = tangle_.message(pool[uniform_index(attack_rng_, pool.size())]);
    auto fb = *carried_feedback(captured);
    Errc rc;
    if (attempt % 2 == 0)
    {
      // Byte-identical resubmission of the captured message.
      rc = submit(Cohort::Malicious, captured, [&] { return book_.submit_feedback(fb); });
    }
    else
    {
      // The captured review re-wrapped in a fresh envelope.
      rc = publish(actor, feedback_draft(fb), [&] { return book_.submit_feedback(fb); });
    }
    if (rc == Errc::Ok)
    {
      ++outcome.successes;
    }
    metrics_[std::string{"replay_rejected_"} + std::string{to_string(rc)}] += rc == Errc::Ok ? 0 : 1;
    return;
  }

  case AttackKind::NetworkDoS: {
    MessageDraft draft;
    Encoder payload;
    payload.str("flood").u64(attempt);
    draft.payload = payload.take();
    draft.parents = tangle_.select_tips(tip_rng_);
    draft.timestamp = now_;
    auto &author = ids_[actor].author;
    TangleMessage msg;
    if (attempt % 2 == 0)
    {
      // Honest solution, but below the network difficulty.
      msg = author.emit(std::move(draft), cfg_.tangle_pow_bits - 1);
    }
    else
    {
      // Claims the network difficulty with a nonce that does not meet it.
      msg = author.emit(std::move(draft), cfg_.tangle_pow_bits);
      do
      {
        ++msg.pow.nonce;
      } while (pow_digest(msg.body_bytes(), msg.pow.nonce).leading_zero_bits() >= cfg_.tangle_pow_bits);
      msg.signature = author.keys.sign(msg.signed_bytes());
    }
    if (submit(Cohort::Malicious, msg, {}) == Errc::Ok)
    {
      ++outcome.successes;
    }
    return;
  }

  case AttackKind::AppDoS: {
    WeakReqRequest req;
    req.sender = ids_[actor].id();
    req.n_msg = cfg_.weakreq.n_msg;
    req.fee_total = cfg_.weakreq_policy.min_share.times(req.n_msg).times(2);
    req.timer_interval = cfg_.weakreq.timer_ticks;
    switch (attempt % 3)
    {
    case 0:  // names a burn that never happened
      req.pob = ProofOfBurn{forged_session(), 0, cfg_.weakreq.burn};
      break;
    case 1:  // someone else's burn
      req.pob = burns_.empty() ? ProofOfBurn{forged_session(), 0, cfg_.weakreq.burn}
                               : burns_[uniform_index(attack_rng_, burns_.size())];
      break;
    default: {  // a payment that is not a burn
      auto pay = build_payment(ids_[actor].keys(), ledger_,
                               {TxOutput{ids_[colluder_for(actor)].id(), cfg_.weakreq.burn, {}}},
                               ++ids_[actor].bundle_nonce);
      publish_bundle(actor, pay);
      req.pob = ProofOfBurn{pay.id(), 0, cfg_.weakreq.burn};
      break;
    }
    }
    req.signature = ids_[actor].keys().sign(req.signed_bytes());
    broadcast_request(Cohort::Malicious, req);
    if (mempool_.contains(req.sender) && mempool_.at(req.sender).id() == req.id())
    {
      ++outcome.successes;
    }
    return;
  }

  case AttackKind::WeakReqAbuse: {
    auto const n = cfg_.weakreq.n_msg;
    auto pob = create_pob(ids_[actor].keys(), ledger_, cfg_.weakreq_policy.burn_floor.times(n),
                          ++ids_[actor].bundle_nonce);
    if (publish_bundle(actor, pob.bundle) != Errc::Ok)
    {
      return;
    }
    WeakReqRequest req;
    req.sender = ids_[actor].id();
    req.n_msg = n;
    req.fee_total = cfg_.weakreq_policy.min_fee_unit.times(n);  // valid, but below the miner share
    req.pob = pob.pob;
    req.timer_interval = cfg_.weakreq.timer_ticks;
    req.signature = ids_[actor].keys().sign(req.signed_bytes());
    broadcast_request(Cohort::Malicious, req);
    if (miners_.empty())
    {
      return;
    }
    // Pushes its messages at a miner as if the request had been anchored.
    auto w = uniform_index(attack_rng_, miners_.size());
    WeakReqMessage msg;
    msg.request = req.id();
    msg.index = 1;
    msg.recipient_miner = miners_[w].author.id();
    msg.fee_share = fee_share(req.fee_total, n, 1);
    msg.fee_bundle = build_payment(ids_[actor].keys(), ledger_,
                                   {TxOutput{msg.recipient_miner, msg.fee_share, {}}},
                                   ++ids_[actor].bundle_nonce);
    msg.signature = ids_[actor].keys().sign(msg.signed_bytes());
    auto served = services_[w].serve(miners_[w].author, msg, ledger_, tangle_, tip_rng_, now_,
                                     cfg_.tangle_pow_bits);
    if (served.fault == ServeFault::Ok)
    {
      ++outcome.successes;
    }
    return;
  }

  case AttackKind::Liveness: {
    auto params = cfg_.liveness;
    params.relaxation = cfg_.chain.relaxation;
    auto trace = run_liveness(params, MiningMode::SlidingWindow,
                              cfg_.seed * 1000003 + attempt);
    liveness_balance_.push_back(static_cast<double>(trace.balance_ticks));
    if (!trace.honest_lead_block)
    {
      ++outcome.successes;
    }
    return;
  }
  }
}

//------------------------------------------------------------------------------
// Main loop and evaluation
//------------------------------------------------------------------------------

void World::run()
{
  for (now_ = 1; now_ <= cfg_.duration_ticks; ++now_)
  {
    device_step();
    chain_step();
    honest_step();
    attack_step();
    auto const supply = ledger_.circulating() + ledger_.burned() + ledger_.fees();
    if (supply != ledger_.minted())
    {
      ++metrics_["supply_violations"];
    }
  }
  now_ = cfg_.duration_ticks;
}

void World::evaluate(MetricsReport &report)
{
  std::map<NodeId, NodeClass> truth;
  for (auto const &who : ids_)
  {
    truth[who.id()] = who.cohort == Cohort::Honest ? NodeClass::Honest : NodeClass::Malicious;
  }
  report.no_positives = std::none_of(truth.begin(), truth.end(),
                                     [](auto const &kv) { return kv.second == NodeClass::Malicious; });

  auto const &feedback = book_.feedback();
  auto const averages = average_scores(feedback);
  auto graph = InteractionGraph::from_feedback(feedback);
  for (auto const &who : ids_)
  {
    graph.add_vertex(who.id());
  }
  FlowNetwork network{graph};

  std::map<NodeId, double> netflow_sum;
  AggregatorScore avg_score;
  AggregatorScore flow_score;
  std::vector<double> medians;
  for (auto e : evaluators_)
  {
    auto const &evaluator = ids_[e].id();
    std::map<NodeId, NodeClass> avg_pred;
    std::map<NodeId, NodeClass> flow_pred;
    std::map<NodeId, NodeClass> subjects;
    std::map<NodeId, double> flows;
    std::vector<double> positives;
    for (auto const &[id, cls] : truth)
    {
      if (id == evaluator)
      {
        continue;
      }
      subjects[id] = cls;
      auto it = averages.find(id);
      auto const avg = it == averages.end() ? 0.0 : it->second;
      avg_pred[id] = classify(avg, cfg_.trust_threshold) == TrustClass::Trusted ? NodeClass::Honest
                                                                              : NodeClass::Malicious;
      auto const flow = network.netflow_score(evaluator, id);
      flows[id] = flow;
      netflow_sum[id] += flow;
      if (flow > 0.0)
      {
        positives.push_back(flow);
      }
    }
    auto const med = median(positives);
    medians.push_back(med);
    auto const cut = cfg_.trust_threshold * med;
    for (auto const &[id, flow] : flows)
    {
      bool const flagged = positives.empty() || flow < cut;
      flow_pred[id] = flagged ? NodeClass::Malicious : NodeClass::Honest;
    }
    auto const ca = confusion(avg_pred, subjects);
    auto const cf = confusion(flow_pred, subjects);
    avg_score.fscore += ca.fscore();
    flow_score.fscore += cf.fscore();
    for (auto [dst, src] : {std::pair{&avg_score.pooled, &ca}, std::pair{&flow_score.pooled, &cf}})
    {
      dst->tp += src->tp;
      dst->fp += src->fp;
      dst->fn += src->fn;
      dst->tn += src->tn;
    }
  }
  if (!evaluators_.empty())
  {
    avg_score.fscore /= static_cast<double>(evaluators_.size());
    flow_score.fscore /= static_cast<double>(evaluators_.size());
  }
  report.fscore["average"] = avg_score;
  report.fscore["netflow"] = flow_score;
  report.metrics["netflow_median_positive_score"] = median(medians);
  report.notes["netflow_calibration"] =
    "per evaluator: flagged iff score < trust_threshold x median of its positive scores";
  report.notes["average_rule"] = "flagged iff average <= trust_threshold";

  if (attacks_.contains(AttackKind::Sybil))
  {
    auto &outcome = attacks_[AttackKind::Sybil];
    for (auto const &pair : sybils_)
    {
      bool credited = false;
      for (auto e : evaluators_)
      {
        credited = credited || network.netflow_score(ids_[e].id(), ids_[pair.first].id()) > 0.0 ||
                   network.netflow_score(ids_[e].id(), ids_[pair.second].id()) > 0.0;
      }
      outcome.successes += credited ? 1 : 0;
    }
  }

  auto const n_eval = std::max<std::size_t>(evaluators_.size(), 1);
  std::set<NodeId> evaluator_ids;
  for (auto e : evaluators_)
  {
    evaluator_ids.insert(ids_[e].id());
  }
  for (auto const &who : ids_)
  {
    NodeRow row;
    row.id = who.id().short_hex();
    row.cohort = std::string{cohort_name(who.cohort)};
    row.balance = ledger_.balance(who.id()).units();
    row.evaluator = evaluator_ids.contains(who.id());
    auto it = averages.find(who.id());
    row.average = it == averages.end() ? 0.0 : it->second;
    row.netflow = netflow_sum[who.id()] / static_cast<double>(n_eval);
    report.nodes.push_back(std::move(row));
  }
}

ScenarioResult World::finish()
{
  ScenarioResult result{MetricsReport{}, std::move(tangle_), std::move(chain_)};
  auto &report = result.report;
  report.seed = cfg_.seed;
  report.experiment = std::string{to_string(cfg_.experiment)};
  report.config_digest = config_digest(cfg_).hex();
  report.protections = cfg_.protections;
  report.elapsed_ticks = cfg_.duration_ticks;

  std::map<MessageKind, std::uint64_t> by_kind;
  for (auto const &id : result.tangle.attachment_order())
  {
    auto const &msg = result.tangle.message(id);
    if (!msg.is_genesis())
    {
      ++by_kind[msg.kind];
    }
  }
  auto const ticks = static_cast<double>(std::max<std::uint64_t>(cfg_.duration_ticks, 1));
  report.tps["normal"] = by_kind[MessageKind::Normal] / ticks;
  report.tps["dumb"] = by_kind[MessageKind::Dumb] / ticks;
  report.tps["weakreq"] = by_kind[MessageKind::WeakReqAttached] / ticks;

  // evaluate() reads tangle_ and chain_ only through book_ and ledger_.
  evaluate(report);
  report.attacks = attacks_;

  for (auto const &[cohort, counter] : admission_)
  {
    report.metrics["admitted_" + cohort] = static_cast<double>(counter.admitted);
    report.metrics["rejected_" + cohort] = static_cast<double>(counter.rejected);
  }
  for (auto const &[key, value] : metrics_)
  {
    report.metrics[key] = value;
  }
  report.metrics.emplace("supply_violations", 0.0);
  report.metrics["supply_minted"] = static_cast<double>(ledger_.minted().units());
  report.metrics["supply_burned"] = static_cast<double>(ledger_.burned().units());
  report.metrics["supply_fees"] = static_cast<double>(ledger_.fees().units());
  report.metrics["supply_circulating"] = static_cast<double>(ledger_.circulating().units());
  report.metrics["feedback_admitted"] = static_cast<double>(book_.feedback().size());
  report.metrics["identities"] = static_cast<double>(ids_.size());
  report.metrics["evaluators"] = static_cast<double>(evaluators_.size());
  if (!liveness_balance_.empty())
  {
    report.metrics["liveness_median_balance_ticks"] = median(liveness_balance_);
  }
  std::uint64_t devices_done = 0;
  for (auto const &device : devices_)
  {
    devices_done += device.state() == DeviceState::Done ? 1 : 0;
  }
  report.metrics["weakreq_devices_done"] = static_cast<double>(devices_done);
  report.notes["attack_budget"] = "attack.<kind> = total attempts by that kind's subgroup";

  report.tangle_digest = result.tangle.state_digest().hex();
  report.chain_digest = result.chain.state_digest().hex();
  return result;
}

}  // namespace

ScenarioResult run_mixed(SimConfig const &config)
{
  World world{config};
  world.run();
  return world.finish();
}

}  // namespace tangletrs::sim
