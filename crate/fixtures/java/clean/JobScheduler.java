package org.example.jobs;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class JobScheduler {
  private static final Logger LOGGER = LoggerFactory.getLogger(JobScheduler.class);

  private final Queue<Job> queue = new ArrayDeque<>();

  public void drain() {
    int failed = 0;
    while (!queue.isEmpty()) {
      Job job = queue.poll();
      if (!job.run()) {
        failed++;
        LOGGER.debug("Job {} failed with status {}", job.getName(), job.getStatus());
      }
    }
    if (failed > 0) {
      LOGGER.warn("{} jobs failed during drain", failed);
    }
  }

  public void submit(Job job) {
    queue.add(job);
    LOGGER.info("Queued job {} ({} pending)", job.getName(), queue.size());
  }
}
