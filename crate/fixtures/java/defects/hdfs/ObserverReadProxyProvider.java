package org.apache.hadoop.hdfs.server.namenode.ha;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class ObserverReadProxyProvider {
  private static final Logger LOG = LoggerFactory.getLogger(ObserverReadProxyProvider.class);

  private NNProxyInfo current;

  Object invokeOnObserver(Method method, Object[] args) throws Throwable {
    Object retVal = null;
    try {
      retVal = method.invoke(current.proxy, args);
    } catch (ObserverRetryOnActiveException ore) {
      LOG.info("Encountered ObserverRetryOnActiveException from {}." + " Retry active namenode directly.", current.proxyInfo);
      retVal = null;
    }
    return retVal;
  }
}
