package org.apache.hadoop.hdfs;

import java.io.IOException;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

class DataStreamer {
  static final Logger LOG = LoggerFactory.getLogger(DataStreamer.class);

  private String lastException;
  private int errorIndex;

  boolean createBlockOutputStream(DatanodeInfo[] nodes, long newGS) {
    boolean result = false;
    try {
      Socket s = createSocketForPipeline(nodes[0], nodes.length);
      sendSetupRequest(s, newGS);
      result = true;
    } catch (IOException ie) {
      LOG.info("Exception in createBlockOutputStream " + this, ie);
      errorIndex = 0;
      lastException = ie.getMessage();
    }
    return result;
  }
}
