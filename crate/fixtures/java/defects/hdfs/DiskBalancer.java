package org.apache.hadoop.hdfs.server.datanode;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class DiskBalancer {
  private static final Logger LOG = LoggerFactory.getLogger(DiskBalancer.class);

  private Future<?> future;

  public void submitPlan(String planId, long planVersion, String planFile, String planData, boolean force)
      throws DiskBalancerException {
    if (future != null && !future.isDone()) {
      LOG.error("Disk Balancer - Executing another plan, submitPlan failed.");
      throw new DiskBalancerException("Executing another plan", DiskBalancerException.Result.PLAN_ALREADY_IN_PROGRESS);
    }
    verifyPlan(planId, planVersion, planData, force);
    createWorkPlan(planData);
  }
}
