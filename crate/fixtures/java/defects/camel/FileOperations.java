package org.apache.camel.component.file;

import java.io.File;
import java.io.IOException;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class FileOperations {
  private static final Logger LOG = LoggerFactory.getLogger(FileOperations.class);

  private final Endpoint endpoint;

  public FileOperations(Endpoint endpoint) {
    this.endpoint = endpoint;
  }

  private boolean writeFileByFile(File source, File target) throws IOException {
    File tempTarget = new File(target.getParentFile(), target.getName() + ".tmp");
    if (target.exists() && endpoint.isEagerDeleteTargetFile()) {
      if (LOG.isTraceEnabled()) {
        LOG.trace("Deleting existing file: " + tempTarget);
      }
      FileUtil.deleteFile(target);
    }
    return FileUtil.renameFile(source, tempTarget, endpoint.isCopyAndDeleteOnRenameFail());
  }
}
