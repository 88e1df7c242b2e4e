#include "qtree/runner.hpp"

#include "qtree/hotstuff.hpp"
#include "qtree/kernel.hpp"
#include "qtree/paxos.hpp"
#include "qtree/pbft.hpp"
#include "qtree/raft.hpp"

namespace qtree::sim {

Trace run_protocol(const SimConfig& cfg) {
  switch (cfg.protocol) {
    case Protocol::Paxos:
    case Protocol::MultiPaxos:
      return Kernel<paxos::PaxosFamily>(cfg).run();
    case Protocol::Raft:
      return Kernel<raft::RaftProto>(cfg).run();
    case Protocol::Pbft:
      return Kernel<pbft::PbftProto>(cfg).run();
    case Protocol::HotStuff:
      return Kernel<hotstuff::HotStuffProto>(cfg).run();
  }
  throw std::invalid_argument("unknown protocol");
}

}  // namespace qtree::sim
