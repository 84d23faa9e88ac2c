package org.apache.hadoop.hive.metastore;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class ObjectStoreConf {
  private static final Logger LOG = LoggerFactory.getLogger(ObjectStoreConf.class);

  private final Properties prop = new Properties();

  void overrideProperty(Configuration conf, String varName) {
    String confVal = conf.get(varName);
    String prevVal = prop.getProperty(varName);
    if (confVal != null && !confVal.equals(prevVal)) {
      LOG.debug("Overriding {} value {} from jpox.properties with {}", varName, prevVal, confVal);
      prop.setProperty(varName, confVal);
    }
  }
}
