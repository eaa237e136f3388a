// Exploration state machine. Holds only what the service said; every
// answer, move, and chain shown to the user is a verbatim service response.

import {
  AnswersResult,
  KbSummary,
  Move,
  NavigationChain,
  ServiceClient,
  ServiceError,
} from "./api.js";

export interface HistoryEntry {
  query: string;
  via: string | null; // move/chain description that produced this query
}

export interface NavigationOptions {
  up: NavigationChain[];
  down: NavigationChain[];
}

export interface ExplorationState {
  summary: KbSummary | null;
  queryText: string;
  answers: AnswersResult | null;
  relaxMoves: Move[];
  restrainMoves: Move[];
  navigation: Map<string, NavigationOptions>;
  history: HistoryEntry[];
  error: string | null;
  busy: boolean;
}

export function queryVariables(queryText: string): string[] {
  const seen = new Set<string>();
  const body = queryText.split(":-")[1] ?? "";
  for (const match of body.matchAll(/\?([A-Za-z][A-Za-z0-9_]*)/g)) {
    seen.add(match[1]);
  }
  return [...seen];
}

type Listener = (state: ExplorationState) => void;

export class ExplorerController {
  private state: ExplorationState = {
    summary: null,
    queryText: "",
    answers: null,
    relaxMoves: [],
    restrainMoves: [],
    navigation: new Map(),
    history: [],
    error: null,
    busy: false,
  };
  private listeners: Listener[] = [];
  private runToken = 0;

  constructor(private readonly client: ServiceClient) {}

  get current(): ExplorationState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(changes: Partial<ExplorationState>): void {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private fail(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    this.update({ error: message, busy: false });
  }

  async loadKb(kbText: string): Promise<void> {
    this.update({ busy: true, error: null });
    try {
      const summary = await this.client.loadKb(kbText);
      this.update({
        summary,
        answers: null,
        relaxMoves: [],
        restrainMoves: [],
        navigation: new Map(),
        history: [],
        busy: false,
      });
    } catch (error) {
      this.fail(error);
    }
  }

  setQuery(queryText: string): void {
    // A manual edit starts a fresh exploration rooted at this query.
    this.update({ queryText, history: [], error: null });
  }

  async run(): Promise<void> {
    const summary = this.state.summary;
    if (!summary) {
      this.update({ error: "load a knowledge base first" });
      return;
    }
    if (this.state.history.length === 0) {
      this.update({ history: [{ query: this.state.queryText, via: null }] });
    }
    const token = ++this.runToken;
    this.update({ busy: true, error: null });
    try {
      const query = this.state.queryText;
      const answers = await this.client.answers(summary.kb_id, query);
      if (token !== this.runToken) {
        return; // a newer run superseded this one
      }
      this.update({ answers });
      await this.refreshMoves(token);
      await this.refreshNavigation(token);
      if (token === this.runToken) {
        this.update({ busy: false });
      }
    } catch (error) {
      if (token === this.runToken) {
        this.fail(error);
      }
    }
  }

  private async refreshMoves(token: number): Promise<void> {
    const summary = this.state.summary;
    if (!summary) {
      return;
    }
    const query = this.state.queryText;
    const [relax, restrain] = await Promise.all([
      this.client.moves(summary.kb_id, query, "relax", true),
      this.client.moves(summary.kb_id, query, "restrain", true),
    ]);
    if (token === this.runToken) {
      this.update({ relaxMoves: relax, restrainMoves: restrain });
    }
  }

  private async refreshNavigation(token: number): Promise<void> {
    const summary = this.state.summary;
    if (!summary) {
      return;
    }
    const query = this.state.queryText;
    const navigation = new Map<string, NavigationOptions>();
    for (const variable of queryVariables(query)) {
      try {
        const [up, down] = await Promise.all([
          this.client.navigate(summary.kb_id, query, `?${variable}`, "up"),
          this.client.navigate(summary.kb_id, query, `?${variable}`, "down")
            .catch((error) => {
              if (error instanceof ServiceError && error.status === 400) {
                return [] as NavigationChain[];
              }
              throw error;
            }),
        ]);
        navigation.set(variable, { up, down });
      } catch (error) {
        if (!(error instanceof ServiceError && error.status === 400)) {
          throw error;
        }
        // not a dimension variable: no buttons for it
      }
    }
    if (token === this.runToken) {
      this.update({ navigation });
    }
  }

  async applyMove(move: Move): Promise<void> {
    const summary = this.state.summary;
    if (!summary) {
      return;
    }
    this.update({ busy: true, error: null });
    try {
      const query = await this.client.apply(summary.kb_id,
                                            this.state.queryText, move.id);
      this.pushStep(query, `${move.rule}: ${move.description}`);
      await this.run();
    } catch (error) {
      if (error instanceof ServiceError && error.status === 410) {
        // The move was computed against an older KB snapshot: refresh the
        // move list instead of applying silently wrong state.
        const token = ++this.runToken;
        try {
          await this.refreshMoves(token);
          this.update({ busy: false,
                        error: "moves were stale and have been refreshed" });
        } catch (refreshError) {
          this.fail(refreshError);
        }
        return;
      }
      this.fail(error);
    }
  }

  async applyChain(chain: NavigationChain, direction: "up" | "down"): Promise<void> {
    const rules = chain.moves.map((m) => m.rule).join(" then ");
    const label = direction === "up" ? "roll up" : "drill down";
    this.pushStep(chain.result_query, `${label} (${rules})`);
    await this.run();
  }

  private pushStep(query: string, via: string): void {
    const history = this.state.history.length
      ? [...this.state.history]
      : [{ query: this.state.queryText, via: null }];
    history.push({ query, via });
    this.update({ queryText: query, history });
  }

  async rewind(index: number): Promise<void> {
    const entry = this.state.history[index];
    if (!entry) {
      return;
    }
    this.update({
      queryText: entry.query,
      history: this.state.history.slice(0, index + 1),
      error: null,
    });
    await this.run();
  }
}
