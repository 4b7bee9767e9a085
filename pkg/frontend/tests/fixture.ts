import type { FetchLike, HttpResponse } from "../src/api.js";
import type { NarrativeDoc, NarrativeSummary, Positions, Progress } from "../src/types.js";

/**
 * A narrative document exactly as the verification service serves it for the
 * worked dog-story example: 15 utterances, a 12-element model proposal whose
 * line 13 carries O3 (A15) and R3 (A16), and no verified layer yet.
 */
const T7DOG: NarrativeDoc = {
  narrative_id: "t7dog",
  story: "dog",
  cohort: "children",
  status: "pending",
  version: 0,
  utterances: [
    { index: 1, raw: "有一天小狗出来玩。", clean: "有一天小狗出来玩。" },
    { index: 2, raw: "它发现一只老鼠。", clean: "它发现一只老鼠。" },
    { index: 3, raw: "想吃它", clean: "想吃它" },
    { index: 4, raw: "可是老鼠跑进了<洞(.) 里> [//] 树洞里。", clean: "可是老鼠跑进了 树洞里。" },
    { index: 5, raw: "它找不着。", clean: "它找不着。" },
    { index: 6, raw: "只好用头伸进(.) 去看。", clean: "只好用头伸进 去看。" },
    { index: 7, raw: "旁边的小孩拎着一堆肉肠。", clean: "旁边的小孩拎着一堆肉肠。" },
    { index: 8, raw: "发现了一个气球。", clean: "发现了一个气球。" },
    { index: 9, raw: "哦<他> [//] 他就去找气", clean: "哦 他就去找气" },
    { index: 10, raw: "他就想去够气球。", clean: "他就想去够气球。" },
    { index: 11, raw: "<小> [//] 小狗缠着想吃那个肉肠。", clean: "小狗缠着想吃那个肉肠。" },
    { index: 12, raw: "<后> [//] 后来小朋友够到气球了。", clean: "后来小朋友够到气球了。" },
    { index: 13, raw: "可是我们小狗<在> [/] 在开心地吃着肉肠。", clean: "可是我们小狗 在开心地吃着肉肠。" },
    { index: 14, raw: "最后 &-uh 小朋友 &-uh 很开心。", clean: "最后 小朋友 很开心。" },
    { index: 15, raw: "小狗也很开心。", clean: "小狗也很开心。" },
  ],
  element_table: [
    {
      element: "A0",
      label: "T",
      name: "Time",
      episode: null,
      category: "Time",
      description: "Time reference, e.g. once upon a time/ one day/ long ago...",
    },
    {
      element: "A1",
      label: "L",
      name: "Location",
      episode: null,
      category: "Location",
      description:
        "Place reference, e.g. in a forest/ in a park/ in a meadow/ in a field/ by a tree/ near a tree/ by the road",
    },
    {
      element: "A2",
      label: "I1",
      name: "IST as initiating event 1",
      episode: 1,
      category: "IST as initiating event",
      description: "Dog was playful/ curious; Dog saw a mouse",
    },
    {
      element: "A3",
      label: "G1",
      name: "Goal 1",
      episode: 1,
      category: "Goal",
      description: "Dog wanted to catch/ get/ chase the mouse/ play with the mouse",
    },
    {
      element: "A4",
      label: "A1",
      name: "Attempt 1",
      episode: 1,
      category: "Attempt",
      description: "Dog jumped forward/ up; Dog chased/ started to chase",
    },
    {
      element: "A5",
      label: "O1",
      name: "Outcome 1",
      episode: 1,
      category: "Outcome",
      description:
        "Dog bumped his head/ bumped into the tree/ did not get the mouse/ was not quick enough; Mouse escaped/ ran behind the tree/ mouse was too quick",
    },
    {
      element: "A6",
      label: "R1",
      name: "IST as reaction 1",
      episode: 1,
      category: "IST as reaction",
      description: "Dog was disappointed/ angry/ hurt; Mouse was happy/ glad/ relieved",
    },
    {
      element: "A7",
      label: "I2",
      name: "IST as initiating event 2",
      episode: 2,
      category: "IST as initiating event",
      description: "Boy was sad/ unhappy/ worried about his balloon; Boy saw the balloon in the tree",
    },
    {
      element: "A8",
      label: "G2",
      name: "Goal 2",
      episode: 2,
      category: "Goal",
      description: "Boy decided/ wanted to get his balloon back",
    },
    {
      element: "A9",
      label: "A2",
      name: "Attempt 2",
      episode: 2,
      category: "Attempt",
      description:
        "Boy was/is pulling/ tried to pull the balloon down from the tree; Boy jumped after the balloon/ reached for (the balloon)/ was/is climbing (the tree)",
    },
    {
      element: "A10",
      label: "O2",
      name: "Outcome 2",
      episode: 2,
      category: "Outcome",
      description: "Boy got his balloon back/ again; Balloon was saved",
    },
    {
      element: "A11",
      label: "R2",
      name: "IST as reaction 2",
      episode: 2,
      category: "IST as reaction",
      description: "Boy was glad/ happy/ satisfied/ pleased/ relieved (to get/have his balloon back)",
    },
    {
      element: "A12",
      label: "I3",
      name: "IST as initiating event 3",
      episode: 3,
      category: "IST as initiating event",
      description: "Dog saw/ noticed the sausages (in the bag); Dog was hungry/ curious/ keen on the sausages",
    },
    {
      element: "A13",
      label: "G3",
      name: "Goal 3",
      episode: 3,
      category: "Goal",
      description: "Dog wanted/ decided to get/ grab/ eat/ have/ steal the sausages",
    },
    {
      element: "A14",
      label: "A3",
      name: "Attempt 3",
      episode: 3,
      category: "Attempt",
      description:
        "Dog was/is grabbing/pulling/ taking/ stealing the sausages; Dog grabs/pulls/takes the sausages (out of the bag)/ reached for the sausages",
    },
    {
      element: "A15",
      label: "O3",
      name: "Outcome 3",
      episode: 3,
      category: "Outcome",
      description: "Dog ate/ got the sausages",
    },
    {
      element: "A16",
      label: "R3",
      name: "IST as reaction 3",
      episode: 3,
      category: "IST as reaction",
      description: "Dog was satisfied/ glad/ pleased/ happy/ not hungry (anymore)",
    },
  ],
  model_positions: {
    A0: [1],
    A1: null,
    A2: [2],
    A3: [3],
    A4: null,
    A5: [4, 5],
    A6: null,
    A7: null,
    A8: [10],
    A9: [9],
    A10: [12],
    A11: [14],
    A12: [11],
    A13: [11],
    A14: null,
    A15: [13],
    A16: [13, 15],
  },
  verified_positions: null,
};

export const ELEMENTS: string[] = T7DOG.element_table.map((row) => row.element);

export function t7dogDoc(): NarrativeDoc {
  return structuredClone(T7DOG);
}

function countPresent(positions: Positions | null): number {
  if (!positions) return 0;
  return Object.values(positions).filter((lines) => lines !== null && lines.length > 0).length;
}

function respond(status: number, body: unknown): HttpResponse {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  };
}

export interface MockServiceState {
  version: number;
  status: "pending" | "in_progress" | "verified";
  verified: Positions | null;
  reviewSeconds: number;
  puts: Array<{ positions: Positions; version: number | null }>;
  heartbeats: number[];
  /** When set, the next PUT answers with this response instead of saving. */
  failNextPut: { status: number; body: unknown } | null;
}

export interface MockService {
  state: MockServiceState;
  fetchFn: FetchLike;
  requests: Array<{ method: string; url: string }>;
}

/**
 * In-memory stand-in for the verification service, holding one narrative
 * (t7dog) and honoring the service's status codes and error body shapes:
 * 404 {"detail": str}, 400 {"detail": [str, ...]}, 409 {"detail": str, "version": int}.
 */
export function mockService(seed?: Partial<Pick<MockServiceState, "version" | "status" | "verified">>): MockService {
  const state: MockServiceState = {
    version: seed?.version ?? 0,
    status: seed?.status ?? "pending",
    verified: seed?.verified ? structuredClone(seed.verified) : null,
    reviewSeconds: 0,
    puts: [],
    heartbeats: [],
    failNextPut: null,
  };
  const requests: Array<{ method: string; url: string }> = [];
  const lineCount = T7DOG.utterances.length;

  const summary = (): NarrativeSummary => ({
    narrative_id: "t7dog",
    story: "dog",
    cohort: "children",
    status: state.status,
    score_model: countPresent(T7DOG.model_positions),
    score_verified: state.verified ? countPresent(state.verified) : null,
  });

  const progress = (): Progress => ({
    total: 1,
    pending: state.status === "pending" ? 1 : 0,
    in_progress: state.status === "in_progress" ? 1 : 0,
    verified: state.status === "verified" ? 1 : 0,
    review_seconds_total: state.reviewSeconds,
  });

  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    requests.push({ method, url });

    if (method === "GET" && url === "/api/narratives") {
      return respond(200, [summary()]);
    }
    if (method === "GET" && url === "/api/progress") {
      return respond(200, progress());
    }

    const detailMatch = /^\/api\/narratives\/([^/]+)$/.exec(url);
    if (method === "GET" && detailMatch) {
      const narrativeId = decodeURIComponent(detailMatch[1] ?? "");
      if (narrativeId !== "t7dog") {
        return respond(404, { detail: `unknown narrative: ${narrativeId}` });
      }
      const doc = t7dogDoc();
      doc.status = state.status;
      doc.version = state.version;
      doc.verified_positions = state.verified ? structuredClone(state.verified) : null;
      return respond(200, doc);
    }

    const putMatch = /^\/api\/narratives\/([^/]+)\/verified$/.exec(url);
    if (method === "PUT" && putMatch) {
      const narrativeId = decodeURIComponent(putMatch[1] ?? "");
      if (narrativeId !== "t7dog") {
        return respond(404, { detail: `unknown narrative: ${narrativeId}` });
      }
      if (state.failNextPut) {
        const forced = state.failNextPut;
        state.failNextPut = null;
        return respond(forced.status, forced.body);
      }
      const body = JSON.parse(init?.body ?? "{}") as { positions?: Positions; version?: number | null };
      const positions = body.positions ?? {};
      const version = body.version ?? null;
      state.puts.push({ positions: structuredClone(positions), version });
      if (version !== null && version !== state.version) {
        return respond(409, {
          detail: `version conflict: narrative is at version ${state.version}`,
          version: state.version,
        });
      }
      const findings: string[] = [];
      for (const element of ELEMENTS) {
        for (const line of positions[element] ?? []) {
          if (!Number.isInteger(line) || line < 1 || line > lineCount) {
            findings.push(`error:OutOfRangeIndex: ${element}: line ${line} is outside 1..${lineCount}`);
          }
        }
      }
      if (findings.length > 0) {
        return respond(400, { detail: findings });
      }
      state.verified = structuredClone(positions);
      state.version += 1;
      state.status = "verified";
      return respond(200, { status: "verified", score: countPresent(positions), version: state.version });
    }

    const heartbeatMatch = /^\/api\/narratives\/([^/]+)\/heartbeat$/.exec(url);
    if (method === "POST" && heartbeatMatch) {
      const narrativeId = decodeURIComponent(heartbeatMatch[1] ?? "");
      if (narrativeId !== "t7dog") {
        return respond(404, { detail: `unknown narrative: ${narrativeId}` });
      }
      const body = JSON.parse(init?.body ?? "{}") as { seconds?: unknown };
      if (typeof body.seconds !== "number" || body.seconds < 0) {
        return respond(400, { detail: ["seconds must be a non-negative number"] });
      }
      state.heartbeats.push(body.seconds);
      state.reviewSeconds += body.seconds;
      if (state.status === "pending") state.status = "in_progress";
      return respond(200, { status: state.status, review_seconds: state.reviewSeconds });
    }

    return respond(404, { detail: `no route: ${method} ${url}` });
  };

  return { state, fetchFn, requests };
}
