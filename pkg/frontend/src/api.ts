// Typed client for the obdax HTTP service. The UI performs no reasoning of
// its own: everything it displays originates from one of these calls.

export interface KbSummary {
  kb_id: string;
  class: string;
  consistent: boolean | null;
  admissibility: { covers: boolean | null; admissible: boolean | null };
  ell: number | null;
}

export interface AnswersResult {
  answers: string[][];
  method: string;
  exact: boolean;
  rewriting_size: number;
}

export interface Move {
  id: string;
  rule: string;
  direction: string;
  data_driven: boolean;
  description: string;
  result_query: string;
}

export interface NavigationChain {
  moves: Move[];
  result_query: string;
  guard_role: string;
  source_categories: string[];
  target_categories: string[];
}

export interface Diagnostic {
  message: string;
  line: number;
  col: number;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly diagnostics: Diagnostic[] = [],
  ) {
    super(message);
  }
}

export interface ServiceClient {
  loadKb(kbText: string): Promise<KbSummary>;
  answers(kbId: string, query: string, k?: number): Promise<AnswersResult>;
  moves(kbId: string, query: string, direction: "relax" | "restrain",
        dataDriven: boolean): Promise<Move[]>;
  apply(kbId: string, query: string, moveId: string): Promise<string>;
  navigate(kbId: string, query: string, variable: string,
           direction: "up" | "down"): Promise<NavigationChain[]>;
}

async function errorFrom(response: Response): Promise<ServiceError> {
  let message = `${response.status} ${response.statusText}`;
  let diagnostics: Diagnostic[] = [];
  try {
    const body = await response.json();
    const detail = body?.detail;
    if (detail?.error) {
      message = detail.error;
      if (detail.axiom) {
        message += ` (violates ${detail.axiom})`;
      }
    }
    if (Array.isArray(detail?.diagnostics)) {
      diagnostics = detail.diagnostics;
      message = diagnostics.map((d) => `${d.line}:${d.col}: ${d.message}`).join("\n");
    }
  } catch {
    // keep the status-line message
  }
  return new ServiceError(response.status, message, diagnostics);
}

export class HttpServiceClient implements ServiceClient {
  constructor(private readonly baseUrl: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return response.json() as Promise<T>;
  }

  loadKb(kbText: string): Promise<KbSummary> {
    return this.post("/api/kb", { kb_text: kbText });
  }

  answers(kbId: string, query: string, k?: number): Promise<AnswersResult> {
    return this.post(`/api/kb/${kbId}/answers`, { query, k: k ?? null });
  }

  async moves(kbId: string, query: string, direction: "relax" | "restrain",
              dataDriven: boolean): Promise<Move[]> {
    const body = await this.post<{ moves: Move[] }>(
      `/api/kb/${kbId}/moves`,
      { query, direction, data_driven: dataDriven },
    );
    return body.moves;
  }

  async apply(kbId: string, query: string, moveId: string): Promise<string> {
    const body = await this.post<{ query: string }>(
      `/api/kb/${kbId}/apply`, { query, move_id: moveId });
    return body.query;
  }

  async navigate(kbId: string, query: string, variable: string,
                 direction: "up" | "down"): Promise<NavigationChain[]> {
    const body = await this.post<{ chains: NavigationChain[] }>(
      `/api/kb/${kbId}/navigate`, { query, var: variable, direction });
    return body.chains;
  }
}
