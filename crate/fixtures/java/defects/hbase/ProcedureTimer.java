package org.apache.hadoop.hbase.procedure2;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class ProcedureTimer {
  private static final Logger LOG = LoggerFactory.getLogger(ProcedureTimer.class);

  private final TimeMeasurement timeMeasurement = new TimeMeasurement();
  private final String name;

  public ProcedureTimer(String name) {
    this.name = name;
  }

  public String getName() {
    return name;
  }

  public void report() {
    if (timeMeasurement.getCount() == 0) {
      return;
    }
    LOG.info("{} average execution time: {} ns.", getName(), (long)(timeMeasurement.getAverageTime()));
    timeMeasurement.reset();
  }
}
