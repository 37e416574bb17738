"""Add SimulationRun model

Revision ID: 5c1e7a9d2b40
Revises:
Create Date: 2026-10-19 18:30:00.000000

"""
from alembic import op
import sqlalchemy as sa


# revision identifiers, used by Alembic.
revision = '5c1e7a9d2b40'
down_revision = None
branch_labels = None
depends_on = None


def upgrade():
    op.create_table('simulation_run',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('scheduler', sa.String(length=20), nullable=False),
    sa.Column('node_count', sa.Integer(), nullable=False),
    sa.Column('mcv_count', sa.Integer(), nullable=False),
    sa.Column('seed', sa.Integer(), nullable=False),
    sa.Column('horizon', sa.Float(), nullable=False),
    sa.Column('isac', sa.Boolean(), nullable=True),
    sa.Column('created_date', sa.DateTime(), nullable=True),
    sa.Column('energy_usage_efficiency', sa.Float(), nullable=True),
    sa.Column('efficiency_defined', sa.Boolean(), nullable=True),
    sa.Column('mean_charging_delay', sa.Float(), nullable=True),
    sa.Column('survival_rate', sa.Float(), nullable=True),
    sa.Column('travel_distance_total', sa.Float(), nullable=True),
    sa.Column('requests_emitted', sa.Integer(), nullable=True),
    sa.Column('requests_served', sa.Integer(), nullable=True),
    sa.Column('duplicate_services', sa.Integer(), nullable=True),
    sa.Column('status', sa.String(length=50), nullable=True),
    sa.Column('error_message', sa.Text(), nullable=True),
    sa.Column('config_json', sa.Text(), nullable=True),
    sa.Column('event_log', sa.Text(), nullable=True),
    sa.PrimaryKeyConstraint('id')
    )
    op.create_index('ix_simulation_run_created_date', 'simulation_run', ['created_date'])


def downgrade():
    op.drop_index('ix_simulation_run_created_date', table_name='simulation_run')
    op.drop_table('simulation_run')
