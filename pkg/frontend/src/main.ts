import { GoldsetClient } from './api.ts';
import { ConsoleSession } from './session.ts';
import type { SessionState } from './session.ts';
import { emptyState, renderDelta, renderProfile, renderRelativeReport } from './views.ts';

export interface ConsoleConfig {
  baseUrl: string;
  smeId: string;
  /** Label options shown for each task; the service validates against the
   * batch policy, so a stale configuration surfaces as an inline 400. */
  labels: string[];
  token?: string;
}

function button(doc: Document, text: string, onClick: () => void): HTMLButtonElement {
  const node = doc.createElement('button');
  node.textContent = text;
  node.addEventListener('click', onClick);
  return node;
}

/** Labeling panel: one active task, label buttons, live progress, publish
 * once the server reports zero pending tasks. */
export function renderSessionPanel(
  doc: Document,
  session: ConsoleSession,
  labels: string[],
  onPublish: () => void,
): HTMLElement {
  const panel = doc.createElement('section');
  panel.className = 'session-panel';

  const redraw = (state: SessionState) => {
    panel.replaceChildren();
    const progress = doc.createElement('p');
    progress.className = 'progress';
    progress.textContent = state.progress
      ? `${state.progress.labeled}/${state.progress.total} labeled`
      : 'loading…';
    panel.appendChild(progress);

    if (state.notice) {
      const notice = doc.createElement('p');
      notice.className = 'notice';
      notice.textContent = state.notice;
      panel.appendChild(notice);
    }

    if (state.currentTask) {
      const task = state.currentTask;
      const card = doc.createElement('div');
      card.className = 'task-card';
      const title = doc.createElement('h3');
      title.textContent = task.item_id;
      card.appendChild(title);
      const meta = doc.createElement('p');
      meta.className = 'task-meta';
      meta.textContent = `policy ${task.policy_id}@${task.policy_version} · task ${task.task_id}`;
      card.appendChild(meta);
      for (const label of labels) {
        card.appendChild(button(doc, label, () => void session.submit(label)));
      }
      panel.appendChild(card);
    } else if (state.exhausted) {
      panel.appendChild(emptyState(doc, 'batch complete'));
    }

    const publish = button(doc, 'publish', onPublish);
    publish.disabled = !session.canPublish();
    panel.appendChild(publish);
  };

  session.subscribe(redraw);
  redraw(session.getState());
  return panel;
}

async function route(doc: Document, root: HTMLElement, config: ConsoleConfig): Promise<void> {
  const client = new GoldsetClient({ baseUrl: config.baseUrl, token: config.token });
  const parts = doc.defaultView!.location.hash.replace(/^#\/?/, '').split('/');
  root.replaceChildren();
  try {
    switch (parts[0]) {
      case 'label': {
        const batchId = parts[1];
        if (!batchId) {
          root.appendChild(emptyState(doc, 'open #/label/<batch_id> to start labeling'));
          return;
        }
        const session = new ConsoleSession(client, batchId, config.smeId);
        const info = await client.batchStatus(batchId);
        root.appendChild(
          renderSessionPanel(doc, session, config.labels, () => {
            void client
              .publishBatch(batchId, info.batch.policy_id, info.batch.policy_version)
              .then((manifest) => {
                root.replaceChildren(
                  emptyState(doc, `published ${manifest.version_id} (${manifest.item_count} items)`),
                );
              });
          }),
        );
        await session.advance();
        return;
      }
      case 'profile': {
        const versionId = parts[1];
        if (!versionId) {
          root.appendChild(emptyState(doc, 'open #/profile/<version_id>'));
          return;
        }
        root.appendChild(renderProfile(doc, await client.versionProfile(versionId)));
        return;
      }
      case 'delta': {
        const [, v1, v2] = parts;
        if (!v1 || !v2) {
          root.appendChild(emptyState(doc, 'open #/delta/<v1>/<v2>'));
          return;
        }
        root.appendChild(renderDelta(doc, await client.delta(v1, v2)));
        return;
      }
      case 'report': {
        const [, agentId, gds] = parts;
        if (!agentId || !gds) {
          root.appendChild(emptyState(doc, 'open #/report/<agent_id>/<gds>'));
          return;
        }
        const response = await client.agentReport(agentId, gds);
        root.appendChild(renderRelativeReport(doc, response.report, null));
        return;
      }
      default:
        root.appendChild(
          emptyState(doc, 'routes: #/label/<batch> · #/profile/<version> · #/delta/<v1>/<v2> · #/report/<agent>/<gds>'),
        );
    }
  } catch (error) {
    root.appendChild(emptyState(doc, error instanceof Error ? error.message : String(error)));
  }
}

export function startConsole(doc: Document, root: HTMLElement, config: ConsoleConfig): void {
  const rerender = () => void route(doc, root, config);
  doc.defaultView!.addEventListener('hashchange', rerender);
  rerender();
}
