import { ApiClient, isNetworkFailure } from "./api";

export type OutcomeKind = "success" | "error";

// Dashboards report what the annotator did and whether it worked; during a
// study round the sink forwards that to the interactions endpoint, outside
// of one it goes nowhere.
export interface ActionSink {
  report(kind: OutcomeKind, action: string): void;
}

export const nullSink: ActionSink = { report: () => {} };

interface PendingRecord {
  round: string;
  timestamp: string;
  kind: string;
  action: string;
}

const STORAGE_KEY = "railabel.pending-interactions";

function loadBuffer(storage: Storage): PendingRecord[] {
  try {
    const raw = storage.getItem(STORAGE_KEY);
    return raw ? (JSON.parse(raw) as PendingRecord[]) : [];
  } catch {
    return [];
  }
}

function saveBuffer(storage: Storage, buffer: PendingRecord[]): void {
  if (buffer.length === 0) {
    storage.removeItem(STORAGE_KEY);
  } else {
    storage.setItem(STORAGE_KEY, JSON.stringify(buffer));
  }
}

// Posts interaction records for one study round. Records survive an
// unreachable service: they queue up in storage and flush, in order, as
// soon as a later post gets through again.
export class InteractionReporter implements ActionSink {
  private buffer: PendingRecord[];
  private draining: Promise<void> | null = null;
  onOffline: (() => void) | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly round: string,
    private readonly storage: Storage = window.localStorage,
    private readonly now: () => Date = () => new Date(),
  ) {
    this.buffer = loadBuffer(storage);
  }

  get pendingCount(): number {
    return this.buffer.length;
  }

  report(kind: OutcomeKind, action: string): void {
    this.buffer.push({
      round: this.round,
      timestamp: this.now().toISOString(),
      kind,
      action,
    });
    saveBuffer(this.storage, this.buffer);
    void this.flush();
  }

  flush(): Promise<void> {
    if (this.draining === null) {
      this.draining = this.drain().finally(() => {
        this.draining = null;
      });
    }
    return this.draining;
  }

  private async drain(): Promise<void> {
    while (this.buffer.length > 0) {
      const record = this.buffer[0];
      try {
        await this.api.recordInteraction(this.sessionId, record);
      } catch (error) {
        if (isNetworkFailure(error)) {
          this.onOffline?.();
          return; // keep the record, retry on the next report or flush
        }
        // the service saw it and said no (closed round, bad session);
        // retrying cannot help, drop it
        console.warn("interaction rejected:", error);
      }
      this.buffer.shift();
      saveBuffer(this.storage, this.buffer);
    }
  }
}
