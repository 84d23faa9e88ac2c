package org.apache.hadoop.hive.ql.io;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class HiveInputFormat {
  private static final Logger LOG = LoggerFactory.getLogger(HiveInputFormat.class);

  protected PartitionDesc getPartitionDescFromPath(Map<Path, PartitionDesc> pathToPartInfo, Path dir) {
    PartitionDesc part = pathToPartInfo.get(dir);
    if (part == null) {
      Path path = new Path(dir.toUri().getPath());
      String otherPart = path.getName();
      part = pathToPartInfo.get(path);
      LOG.debug("Found spec for " + path + " " + otherPart + " from " + pathToPartInfo);
    }
    return part;
  }
}
