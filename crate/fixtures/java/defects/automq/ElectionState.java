package kafka.automq.controller;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class ElectionState {
  private static final Logger log = LoggerFactory.getLogger(ElectionState.class);

  private LeaderAndEpoch leader;
  private final PendingQueue pending = new PendingQueue();

  public boolean tryAppend(int nodeId, long epoch, Record record) {
    if (leader.nodeId() != nodeId) {
      log.trace("tryAppend(nodeId={}, epoch={}): the given node id does not match the current leader id of {}.", nodeId, leader.nodeId());
      return false;
    }
    if (leader.epoch() != epoch) {
      return false;
    }
    pending.add(record);
    return true;
  }
}
