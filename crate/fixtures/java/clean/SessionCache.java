package org.example.cache;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class SessionCache {
  private static final Logger log = LoggerFactory.getLogger(SessionCache.class);

  private final Map<String, Session> sessions = new HashMap<>();
  private final int capacity;

  public SessionCache(int capacity) {
    this.capacity = capacity;
  }

  public Session get(String sessionId) {
    Session s = sessions.get(sessionId);
    if (s == null) {
      if (log.isTraceEnabled()) {
        log.trace("Cache miss for " + sessionId + " (size " + sessions.size() + ")");
      }
      return null;
    }
    return s;
  }

  public void evict(String sessionId) {
    if (sessions.remove(sessionId) != null) {
      log.info("Evicted session {}; {} of {} slots in use", sessionId, sessions.size(), capacity);
    }
  }

  public void restore(Path snapshot) {
    try {
      sessions.putAll(SnapshotReader.read(snapshot));
    } catch (IOException ex) {
      log.error("Could not restore sessions from {}", snapshot, ex);
      throw new IllegalStateException(ex);
    }
  }
}
