package org.apache.hadoop.yarn.server.resourcemanager.scheduler.capacity;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class TestCapacityScheduler {
  private static final Logger LOG = LoggerFactory.getLogger(TestCapacityScheduler.class);

  private MockRM rm;

  public void testNotAssignMultiple() throws Exception {
    LOG.info("--- START: testNotAssignMultiple ---");
    MockNM nm = rm.registerNode("127.0.0.1:1234", 8192);
    RMApp app = rm.submitApp(1024);
    nm.nodeHeartbeat(true);
    assertEquals(1, app.getAppAttempts().size());
    LOG.info("--- START: testNotAssignMultiple ---");
  }
}
