package org.example.storage;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class BlockReport {
  private static final Logger LOG = LoggerFactory.getLogger(BlockReport.class);

  private final List<Block> blocks = new ArrayList<>();

  public int send(String datanode, long timeoutMs) {
    int sent = 0;
    for (Block b : blocks) {
      LOG.debug("Sending block {} to {}", b.getId(), datanode);
      sent++;
    }
    LOG.info("Sent {} blocks to {} within {} ms", sent, datanode, timeoutMs);
    return sent;
  }

  public void load(File file) {
    try {
      blocks.addAll(BlockReader.read(file));
    } catch (IOException e) {
      LOG.warn("Failed to read block list from {}", file, e);
    }
  }
}
