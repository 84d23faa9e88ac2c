package org.apache.hadoop.hdfs.server.datanode.checker;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class DatasetVolumeChecker {
  private static final Logger LOG = LoggerFactory.getLogger(DatasetVolumeChecker.class);

  private final long maxAllowedTimeForCheckMs;
  private final Timer timer;

  public DatasetVolumeChecker(long maxAllowedTimeForCheckMs, Timer timer) {
    this.maxAllowedTimeForCheckMs = maxAllowedTimeForCheckMs;
    this.timer = timer;
  }

  public Set<FsVolumeSpi> checkAllVolumes(FsDatasetSpi dataset) throws InterruptedException {
    final Set<FsVolumeSpi> failedVolumes = new HashSet<>();
    final CountDownLatch latch = new CountDownLatch(1);
    scheduleChecks(dataset, failedVolumes, latch);
    if (!latch.await(maxAllowedTimeForCheckMs, TimeUnit.MILLISECONDS)) {
      LOG.warn("checkAllVolumes timed out after {} ms" + maxAllowedTimeForCheckMs);
    }
    return failedVolumes;
  }
}
