/** Local timestamp source; the service clock stays the timing authority. */

/**
 * Monotonic wrapper over a millisecond source. Wall clocks can step
 * backwards (NTP); outbound timestamps must not.
 */
export class MonotonicClock {
  private last = 0;

  constructor(private readonly source: () => number = Date.now) {}

  now(): number {
    const t = Math.round(this.source());
    if (t > this.last) {
      this.last = t;
    }
    return this.last;
  }
}
