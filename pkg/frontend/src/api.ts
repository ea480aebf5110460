import type {
  AgentReportResponse,
  ApiErrorBody,
  BatchStatusResponse,
  DeltaResponse,
  LabelResponse,
  NextTaskResponse,
  VersionManifest,
  VersionProfile,
} from './types.ts';

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

export interface ClientOptions {
  baseUrl: string;
  token?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
}

async function errorBody(response: Response): Promise<ApiErrorBody> {
  try {
    const body = (await response.json()) as Partial<ApiErrorBody>;
    return {
      code: body.code ?? 'error',
      message: body.message ?? `HTTP ${response.status}`,
    };
  } catch {
    return { code: 'error', message: `HTTP ${response.status}` };
  }
}

/** Thin typed client for the documented goldset endpoints — no extra routes,
 * no response reshaping beyond JSON parsing. */
export class GoldsetClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchFn: typeof fetch;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, '');
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return (await response.json()) as T;
  }

  batchStatus(batchId: string): Promise<BatchStatusResponse> {
    return this.request('GET', `/api/v1/batches/${batchId}`);
  }

  /** Resolves null when the batch is exhausted (HTTP 204). */
  async nextTask(batchId: string): Promise<NextTaskResponse | null> {
    const headers: Record<string, string> = {};
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/batches/${batchId}/next-task`,
      { method: 'GET', headers },
    );
    if (response.status === 204) return null;
    if (!response.ok) throw new ApiError(response.status, await errorBody(response));
    return (await response.json()) as NextTaskResponse;
  }

  labelTask(
    taskId: string,
    label: string,
    smeId: string,
    idempotencyKey: string,
  ): Promise<LabelResponse> {
    return this.request('POST', `/api/v1/tasks/${taskId}/label`, {
      label,
      sme_id: smeId,
      idempotency_key: idempotencyKey,
    });
  }

  publishBatch(
    batchId: string,
    policyId: string,
    policyVersion: number,
    options: { parent?: string; allowPartial?: boolean } = {},
  ): Promise<VersionManifest> {
    return this.request('POST', `/api/v1/batches/${batchId}/publish`, {
      policy_id: policyId,
      policy_version: policyVersion,
      parent: options.parent ?? null,
      allow_partial: options.allowPartial ?? false,
    });
  }

  versionProfile(versionId: string): Promise<VersionProfile> {
    return this.request('GET', `/api/v1/versions/${versionId}/profile`);
  }

  delta(v1: string, v2: string): Promise<DeltaResponse> {
    return this.request(
      'GET',
      `/api/v1/delta?v1=${encodeURIComponent(v1)}&v2=${encodeURIComponent(v2)}`,
    );
  }

  agentReport(agentId: string, gds: string): Promise<AgentReportResponse> {
    return this.request(
      'GET',
      `/api/v1/agents/${encodeURIComponent(agentId)}/report?gds=${encodeURIComponent(gds)}`,
    );
  }
}
