package org.apache.hadoop.yarn.server.nodemanager;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class ContainerExecutorSetup {
  private static final Logger LOG = LoggerFactory.getLogger(ContainerExecutorSetup.class);

  private ResourceHandlerChain resourceHandlerChain;

  public void init(Configuration conf) throws IOException {
    resourceHandlerChain = ResourceHandlerModule.getConfiguredResourceHandlerChain(conf);
    if (LOG.isDebugEnabled()) {
      LOG.debug("Resource handler chain enabled = " + (resourceHandlerChain == null));
    }
    if (resourceHandlerChain != null) {
      resourceHandlerChain.bootstrap(conf);
    }
  }
}
