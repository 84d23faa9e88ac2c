package org.apache.hadoop.hbase.regionserver;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class SnapshotFlusher {
  private static final Logger LOG = LoggerFactory.getLogger(SnapshotFlusher.class);

  private final Region region;

  public SnapshotFlusher(Region region) {
    this.region = region;
  }

  public void flush() throws IOException {
    long start = EnvironmentEdgeManager.currentTime();
    region.flush(true);
    long duration = getElapsedTime(start);
    LOG.info("Flushed region {} in {} ns", region.getRegionInfo().getEncodedName(), duration);
  }

  private long getElapsedTime(long start) {
    return EnvironmentEdgeManager.currentTime() - start;
  }
}
