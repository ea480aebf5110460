import { ApiError, GoldsetClient } from './api.ts';
import type { BatchProgress, LabelTask } from './types.ts';

export interface SessionState {
  batchId: string;
  smeId: string;
  currentTask: LabelTask | null;
  progress: BatchProgress | null;
  /** Inline, non-blocking message from the last failed action, if any. */
  notice: string | null;
  exhausted: boolean;
  /** Submissions queued while offline, replayed in order on reconnect. */
  queuedSubmissions: number;
}

interface PendingSubmission {
  taskId: string;
  label: string;
  idempotencyKey: string;
}

export type SessionListener = (state: SessionState) => void;

/** One SME working through one batch: fetch next task, submit label,
 * auto-advance. Progress always reflects the last server response
 * (optimistic UI with server reconciliation); each submission carries a
 * stable idempotency key so double-clicks and offline replays record
 * exactly one label. */
export class ConsoleSession {
  private readonly client: GoldsetClient;
  private readonly listeners: SessionListener[] = [];
  private readonly offlineQueue: PendingSubmission[] = [];
  private readonly keysByTask = new Map<string, string>();
  private inFlight = false;
  private state: SessionState;

  constructor(client: GoldsetClient, batchId: string, smeId: string) {
    this.client = client;
    this.state = {
      batchId,
      smeId,
      currentTask: null,
      progress: null,
      notice: null,
      exhausted: false,
      queuedSubmissions: 0,
    };
  }

  getState(): SessionState {
    return { ...this.state };
  }

  subscribe(listener: SessionListener): () => void {
    this.listeners.push(listener);
    return () => {
      const index = this.listeners.indexOf(listener);
      if (index >= 0) this.listeners.splice(index, 1);
    };
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.getState());
  }

  /** Fetch (or re-fetch) the current task. */
  async advance(): Promise<LabelTask | null> {
    const response = await this.client.nextTask(this.state.batchId);
    if (response === null) {
      this.update({ currentTask: null, exhausted: true });
      return null;
    }
    this.update({
      currentTask: response.task,
      progress: response.progress,
      exhausted: false,
    });
    return response.task;
  }

  /** One idempotency key per task per session: a double-click resubmits the
   * same key and the server replays the first result. */
  private keyFor(taskId: string): string {
    let key = this.keysByTask.get(taskId);
    if (key === undefined) {
      key = `${this.state.smeId}:${taskId}:${Date.now().toString(36)}`;
      this.keysByTask.set(taskId, key);
    }
    return key;
  }

  /** Submit a label for the current task and auto-advance. API 4xx/409
   * surface as inline notices; network failures queue the submission. */
  async submit(label: string): Promise<void> {
    const task = this.state.currentTask;
    if (task === null || this.inFlight) return;
    this.inFlight = true;
    const key = this.keyFor(task.task_id);
    try {
      const response = await this.client.labelTask(
        task.task_id,
        label,
        this.state.smeId,
        key,
      );
      this.update({ progress: response.progress, notice: null });
      await this.advance();
    } catch (error) {
      if (error instanceof ApiError) {
        this.update({ notice: `${error.code}: ${error.message}` });
        if (error.status === 409) await this.advance(); // someone else got there
      } else {
        this.offlineQueue.push({ taskId: task.task_id, label, idempotencyKey: key });
        this.update({
          notice: 'offline: submission queued',
          queuedSubmissions: this.offlineQueue.length,
        });
      }
    } finally {
      this.inFlight = false;
    }
  }

  /** Replay queued offline submissions in order; stops at the first failure. */
  async flushQueue(): Promise<void> {
    while (this.offlineQueue.length > 0) {
      const pending = this.offlineQueue[0]!;
      try {
        const response = await this.client.labelTask(
          pending.taskId,
          pending.label,
          this.state.smeId,
          pending.idempotencyKey,
        );
        this.offlineQueue.shift();
        this.update({
          progress: response.progress,
          queuedSubmissions: this.offlineQueue.length,
          notice: null,
        });
      } catch (error) {
        if (error instanceof ApiError) {
          // server rejected it (e.g. conflicting relabel): drop and surface
          this.offlineQueue.shift();
          this.update({
            queuedSubmissions: this.offlineQueue.length,
            notice: `${error.code}: ${error.message}`,
          });
        } else {
          return; // still offline
        }
      }
    }
    // server reconciliation: the replayed tasks are labeled now, so the
    // stale current task must be replaced by the next pending one
    if (!this.state.exhausted) {
      await this.advance();
    }
  }

  /** Publish is enabled only once the server reports zero pending tasks. */
  canPublish(): boolean {
    return this.state.progress !== null && this.state.progress.pending === 0;
  }
}
